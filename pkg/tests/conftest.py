import sys
from pathlib import Path

# allow cross-imports between test modules (e.g. the exhaustive oracle)
sys.path.insert(0, str(Path(__file__).parent))
