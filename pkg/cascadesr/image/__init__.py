from cascadesr.image.ops import (
    GradientPair, as_plane, gaussian_kernel, delta_kernel, kernel_radius,
    convolve_circular, correlate_circular, shift_subpixel, shift_subpixel_adjoint,
    decimate, upsample_zero, resize_bicubic, gradient_forward, gradient_adjoint, clip_unit,
)
from cascadesr.image.color import rgb_to_ycbcr, ycbcr_to_rgb, luminance
