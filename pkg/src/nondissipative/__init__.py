"""Non-dissipative decoherence from Gamma-averaged unitary evolution."""

from .qcore import *  # noqa: F401,F403
from .averaging import *  # noqa: F401,F403
from .models import *  # noqa: F401,F403
from .analysis import *  # noqa: F401,F403

__version__ = "0.1.0"
