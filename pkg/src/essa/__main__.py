from essa.cli import main
import sys

sys.exit(main())
