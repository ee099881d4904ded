"""Pairwise perceptual study service: judges pick the more realistic of
two images, winners decided by majority over an odd number of votes."""

from .store import (ComparisonPair, Study, StudyReport, StudyStore, Vote,
                    compute_report)
from .service import create_app

__all__ = ["ComparisonPair", "Study", "StudyReport", "StudyStore", "Vote",
           "compute_report", "create_app"]
