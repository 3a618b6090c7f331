"""Reconstruction/perceptual/style/smoothness losses and image metrics.

All norms are L1. N counts pixel-channels (H*W*C), so masked losses are
channel-count invariant. Feature stacks are plain lists of (C, H, W) float
arrays; whatever produced them (a conv net, a filter bank) stays outside this
module.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InputError

COLOR_OBJECTIVE_WEIGHTS = {
    "context": 1.0,
    "synthesis": 6.0,
    "perceptual": 0.05,
    "style": 120.0,
    "tv": 0.01,
}


def _as_hwc(image):
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[..., None]
    if arr.ndim != 3:
        raise InputError(f"expected HxW or HxWxC image, got shape {arr.shape}")
    return arr


def masked_recon_losses(image, target, synthesis_mask, context_mask):
    """(L_synthesis, L_context): masked L1 differences over N pixel-channels."""
    a = _as_hwc(image)
    b = _as_hwc(target)
    if a.shape != b.shape:
        raise InputError(f"shape mismatch {a.shape} vs {b.shape}")
    s = np.asarray(synthesis_mask, dtype=bool)
    c = np.asarray(context_mask, dtype=bool)
    if s.shape != a.shape[:2] or c.shape != a.shape[:2]:
        raise InputError("mask dimensions do not match the images")
    if (s & c).any():
        raise InputError("synthesis and context masks overlap")
    n = a.size
    diff = np.abs(a - b)
    l_syn = float(diff[s].sum() / n)
    l_ctx = float(diff[c].sum() / n)
    return l_syn, l_ctx


def perceptual_loss(stack_a, stack_b):
    """Sum over layers of L1 difference / layer element count."""
    if len(stack_a) != len(stack_b) or not stack_a:
        raise InputError("feature stacks must be non-empty and equally long")
    total = 0.0
    for fa, fb in zip(stack_a, stack_b):
        fa = np.asarray(fa, dtype=np.float64)
        fb = np.asarray(fb, dtype=np.float64)
        if fa.shape != fb.shape:
            raise InputError(f"layer shape mismatch {fa.shape} vs {fb.shape}")
        total += np.abs(fa - fb).sum() / fa.size
    return float(total)


def style_loss(stack_a, stack_b):
    """Per-layer L1 of the (1/CHW)-normalized Gram difference, scaled 1/C^2."""
    if len(stack_a) != len(stack_b) or not stack_a:
        raise InputError("feature stacks must be non-empty and equally long")
    total = 0.0
    for fa, fb in zip(stack_a, stack_b):
        fa = np.asarray(fa, dtype=np.float64)
        fb = np.asarray(fb, dtype=np.float64)
        if fa.shape != fb.shape:
            raise InputError(f"layer shape mismatch {fa.shape} vs {fb.shape}")
        c, h, w = fa.shape
        ma = fa.reshape(c, h * w)
        mb = fb.reshape(c, h * w)
        gram_diff = (ma @ ma.T - mb @ mb.T) / (c * h * w)
        total += np.abs(gram_diff).sum() / (c * c)
    return float(total)


def tv_loss(image, synthesis_mask):
    """L1 smoothness over in-mask neighbor pairs, divided by N."""
    img = _as_hwc(image)
    s = np.asarray(synthesis_mask, dtype=bool)
    if s.shape != img.shape[:2]:
        raise InputError("mask dimensions do not match the image")
    n = img.size
    both_h = s[:, :-1] & s[:, 1:]
    both_v = s[:-1, :] & s[1:, :]
    dh = np.abs(img[:, 1:] - img[:, :-1])[both_h].sum()
    dv = np.abs(img[1:, :] - img[:-1, :])[both_v].sum()
    return float((dh + dv) / n)


def combined_color_objective(context, synthesis, perceptual, style, tv):
    """Weighted sum of the five color-model loss terms."""
    w = COLOR_OBJECTIVE_WEIGHTS
    return float(
        w["context"] * context
        + w["synthesis"] * synthesis
        + w["perceptual"] * perceptual
        + w["style"] * style
        + w["tv"] * tv
    )


def depth_objective(context, synthesis):
    """The depth model trains on context + synthesis reconstruction only."""
    return float(context + synthesis)


def psnr(image, target, level=255.0):
    """10*log10(level^2 / MSE); +inf for identical images."""
    a = _as_hwc(image)
    b = _as_hwc(target)
    if a.shape != b.shape:
        raise InputError(f"shape mismatch {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(level * level / mse)


def _gaussian_kernel(window, sigma):
    r = window // 2
    ax = np.arange(-r, r + 1, dtype=np.float64)
    g = np.exp(-(ax[:, None] ** 2 + ax[None, :] ** 2) / (2 * sigma * sigma))
    return g / g.sum()


def ssim(image, target, window=11, k1=0.01, k2=0.03, sigma=1.5, level=255.0):
    """Mean SSIM over valid Gaussian-weighted windows, channel-averaged."""
    a = _as_hwc(image)
    b = _as_hwc(target)
    if a.shape != b.shape:
        raise InputError(f"shape mismatch {a.shape} vs {b.shape}")
    h, w, ch = a.shape
    if h < window or w < window:
        raise InputError(f"images smaller than the {window}x{window} SSIM window")
    g = _gaussian_kernel(window, sigma)
    c1 = (k1 * level) ** 2
    c2 = (k2 * level) ** 2

    from numpy.lib.stride_tricks import sliding_window_view

    vals = []
    for c in range(ch):
        pa = sliding_window_view(a[..., c], (window, window))
        pb = sliding_window_view(b[..., c], (window, window))
        mu_a = (pa * g).sum(axis=(-2, -1))
        mu_b = (pb * g).sum(axis=(-2, -1))
        var_a = (g * (pa - mu_a[..., None, None]) ** 2).sum(axis=(-2, -1))
        var_b = (g * (pb - mu_b[..., None, None]) ** 2).sum(axis=(-2, -1))
        cov = (g * (pa - mu_a[..., None, None]) * (pb - mu_b[..., None, None])).sum(axis=(-2, -1))
        num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
        den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
        vals.append(num / den)
    return float(np.mean(vals))
