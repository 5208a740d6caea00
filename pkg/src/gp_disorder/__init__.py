from .services.lattice.lattice_serialization import SOFTWARE_VERSION as __version__
from .gp_wrapper import GPDisorder

__all__ = ["GPDisorder", "__version__"]
