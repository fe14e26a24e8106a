import sys
from pathlib import Path

# allow the acceptance module to import the malformed-text corpus from
# test_policy when pytest runs with importmode=prepend from the repo root
sys.path.insert(0, str(Path(__file__).parent))
