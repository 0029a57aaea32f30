"""
Result CSV access for the API.
Reads fresh on each request, so a sweep that rewrites the file is picked up immediately.
"""

import sys
from pathlib import Path
from typing import Dict, List

sys.path.insert(0, str(Path(__file__).parent.parent))

from utils.csv_utils import read_csv_safe


class ResultsCache:
    """Stateless reader for one sweep result CSV."""

    def __init__(self, csv_path: str = "results/sweep.csv"):
        self.csv_path = Path(csv_path)

    def exists(self) -> bool:
        return self.csv_path.exists()

    def get_rows(self) -> List[Dict]:
        """All rows, empty cells as None; [] when the file does not exist yet."""
        return read_csv_safe(str(self.csv_path))
