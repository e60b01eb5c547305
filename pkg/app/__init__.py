# Dual-Rail Homodyne Tomography
