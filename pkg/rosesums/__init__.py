"""McShane-type sums over conjugacy classes on the metric k-petal rose."""

__version__ = "0.1.0"
