"""
Five invertible views of one image
==================================

Every representation carries the same information: each one inverts
exactly. What changes is how the pixels are arranged for a linear model.
"""

import numpy as np

from repscore.colorspace import fit_prec, ycbcr_array, ycbcr_inverse_array
from repscore.spectral import block_dct_array, block_idct_array, dct2_array, idct2_array

rng = np.random.default_rng(0)
img = rng.random((20, 13, 3))

# forward and inverse pairs; PREC is fitted on the image itself here
prec = fit_prec(img[None])
views = {
    "rgb": (lambda a: a, lambda a: a),
    "ycbcr": (ycbcr_array, ycbcr_inverse_array),
    "prec": (prec.apply_array, prec.invert_array),
    "dct": (dct2_array, idct2_array),
    "blockdct": (lambda a: block_dct_array(a, 8), lambda a: block_idct_array(a, 8, (20, 13))),
}

for name, (fwd, inv) in views.items():
    coef = fwd(img)
    err = np.max(np.abs(inv(coef) - img))
    print(f"{name:<9} shape {str(coef.shape):<13} energy {np.sum(coef**2):9.3f}  round-trip error {err:.1e}")

# The orthonormal DCT keeps the energy of the image; the colour maps do not.
# Block DCT pads 20x13 up to 24x16 and crops back on inversion.

# PREC whitens the pooled channel second moment:
pix = prec.apply_array(img).reshape(-1, 3)
print(np.round(pix.T @ pix / len(pix), 6))
