from ._kernels import backend as kernel_backend

__version__ = "0.1.0"
