import sys
from pathlib import Path

# make helpers/oracles importable regardless of pytest import mode
sys.path.insert(0, str(Path(__file__).parent))
