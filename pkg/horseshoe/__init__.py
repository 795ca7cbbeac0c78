from .__version__ import __version__
from .mapcore import Escaped
from .mapcore import ForcingProfile
from .mapcore import MapParams
from .mapcore import PhasePoint
from .mapcore import apply
from .mapcore import eval_F
from .mapcore import jacobian
from .certifier import certify_horseshoe
from .certifier import scan_parameter
from .itinerary import ItineraryTree
from .survival import classify_regime
from .survival import escape_time_grid
from .periodic import find_fixed_points
from .manifolds import find_tangency
from .melnikov import compute_homoclinic_orbit
from .melnikov import derive_map_params
from .melnikov import melnikov_integrals
from .systems import OdeSystem
