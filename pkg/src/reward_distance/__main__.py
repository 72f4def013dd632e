import sys

from reward_distance.cli import main

sys.exit(main())
