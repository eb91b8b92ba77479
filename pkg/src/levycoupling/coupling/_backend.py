"""Select the compiled evolution kernel when available.

``BACKEND`` reports which kernel is active ("compiled" or "python").  The
pure-Python kernel is always importable and is also used directly whenever a
feature the compiled kernel lacks is requested (custom drift callables,
per-jump event logs).
"""

from . import _fallback

try:
    from . import _core
    evolve_path = _core.evolve_path
    BACKEND = "compiled"
except ImportError:
    evolve_path = _fallback.evolve_path
    BACKEND = "python"
