"""Two-stage personalized pain-intensity estimation from facial landmarks.

A bidirectional-LSTM window regressor maps landmark features to per-frame
PSPI scores; a hidden conditional random field personalized with the I-FES
expressiveness ratio classifies whole sequences into self-reported VAS
levels.  All heavy lifting lives in the compiled ``_painvas`` extension.
"""

from ._painvas import *  # noqa: F401,F403
from ._painvas import __doc__ as _core_doc  # noqa: F401

__version__ = "0.1.0"
