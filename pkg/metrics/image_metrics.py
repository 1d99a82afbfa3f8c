"""
Métricas de imagen: PSNR, SSIM, D-SSIM y L1
Las versiones *_with_gradient devuelven también los gradientes respecto a ambas imágenes
"""

import numpy as np
from scipy.signal import convolve2d, correlate2d

from models.errors import InvalidArgumentError
from models.image_buffer import as_array

PSNR_CAP = 99.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2


def _gaussian_window(size=SSIM_WINDOW, sigma=SSIM_SIGMA):
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(offsets ** 2) / (2.0 * sigma ** 2))
    g /= g.sum()
    return np.outer(g, g)


_WINDOW = _gaussian_window()


def _pair(a, b):
    a, b = as_array(a), as_array(b)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"formas distintas: {a.shape} y {b.shape}")
    return a, b


def _channels(image):
    return image[:, :, None] if image.ndim == 2 else image


def psnr(a, b):
    """PSNR con pico 1; imágenes idénticas dan el tope de 99 dB"""
    a, b = _pair(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, -10.0 * np.log10(mse))


def masked_psnr(a, b, keep):
    """PSNR sobre los píxeles con keep=True (máscara alto × ancho)"""
    a, b = _channels(as_array(a)), _channels(as_array(b))
    keep = np.asarray(keep, dtype=bool)
    if not keep.any():
        raise InvalidArgumentError("la máscara no deja píxeles")
    mse = float(np.mean((a[keep] - b[keep]) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, -10.0 * np.log10(mse))


def _ssim_terms(x, y):
    mx = correlate2d(x, _WINDOW, mode="valid")
    my = correlate2d(y, _WINDOW, mode="valid")
    exx = correlate2d(x * x, _WINDOW, mode="valid")
    eyy = correlate2d(y * y, _WINDOW, mode="valid")
    exy = correlate2d(x * y, _WINDOW, mode="valid")
    a1 = 2.0 * mx * my + SSIM_C1
    a2 = 2.0 * (exy - mx * my) + SSIM_C2
    b1 = mx * mx + my * my + SSIM_C1
    b2 = exx - mx * mx + eyy - my * my + SSIM_C2
    return mx, my, a1, a2, b1, b2


def _check_ssim_shape(a, b):
    a, b = _pair(a, b)
    a, b = _channels(a), _channels(b)
    if min(a.shape[0], a.shape[1]) < SSIM_WINDOW:
        raise InvalidArgumentError(f"SSIM requiere al menos {SSIM_WINDOW}x{SSIM_WINDOW} píxeles")
    return a, b


def ssim(a, b):
    """SSIM con ventana gaussiana 11x11, σ=1.5, promedio sobre canales y posiciones válidas"""
    a, b = _check_ssim_shape(a, b)
    total = 0.0
    for ch in range(a.shape[2]):
        _, _, a1, a2, b1, b2 = _ssim_terms(a[:, :, ch], b[:, :, ch])
        total += float(np.mean(a1 * a2 / (b1 * b2)))
    return total / a.shape[2]


def dssim(a, b):
    return (1.0 - ssim(a, b)) / 2.0


def ssim_with_gradient(a, b):
    """
    SSIM y sus gradientes respecto a cada imagen

    Returns:
        (valor, dSSIM/da, dSSIM/db) con las formas de la entrada
    """
    shape = as_array(a).shape
    a, b = _check_ssim_shape(a, b)
    n_channels = a.shape[2]
    grad_a = np.zeros_like(a)
    grad_b = np.zeros_like(b)
    total = 0.0
    for ch in range(n_channels):
        x, y = a[:, :, ch], b[:, :, ch]
        mx, my, a1, a2, b1, b2 = _ssim_terms(x, y)
        den = b1 * b2
        s = a1 * a2 / den
        total += float(np.mean(s))
        scale = 1.0 / (s.size * n_channels)

        g_exy = scale * 2.0 * a1 / den
        g_exx = scale * -s / b2
        g_mx = scale * (2.0 * my * (a2 - a1) - 2.0 * mx * s * (b2 - b1)) / den
        g_my = scale * (2.0 * mx * (a2 - a1) - 2.0 * my * s * (b2 - b1)) / den

        # adjunto de la correlación 'valid': convolución 'full' con la misma ventana
        adj_exy = convolve2d(g_exy, _WINDOW, mode="full")
        adj_exx = convolve2d(g_exx, _WINDOW, mode="full")
        grad_a[:, :, ch] = convolve2d(g_mx, _WINDOW, mode="full") + 2.0 * x * adj_exx + y * adj_exy
        grad_b[:, :, ch] = convolve2d(g_my, _WINDOW, mode="full") + 2.0 * y * adj_exx + x * adj_exy
    return total / n_channels, grad_a.reshape(shape), grad_b.reshape(shape)


def l1_with_gradient(a, b):
    """Error absoluto medio y sus gradientes (subgradiente 0 en a == b)"""
    a, b = _pair(a, b)
    diff = a - b
    grad = np.sign(diff) / diff.size
    return float(np.mean(np.abs(diff))), grad, -grad


def photometric_loss(a, b, lambda_dssim):
    """
    (1 − λ)·L1 + λ·D-SSIM y sus gradientes respecto a ambas imágenes

    Returns:
        (pérdida, dL/da, dL/db)
    """
    if not 0.0 <= lambda_dssim <= 1.0:
        raise InvalidArgumentError("lambda_dssim debe estar en [0, 1]")
    l1, g1a, g1b = l1_with_gradient(a, b)
    if lambda_dssim == 0.0:
        return l1, g1a, g1b
    value, gsa, gsb = ssim_with_gradient(a, b)
    loss = (1.0 - lambda_dssim) * l1 + lambda_dssim * (1.0 - value) / 2.0
    grad_a = (1.0 - lambda_dssim) * g1a - 0.5 * lambda_dssim * gsa
    grad_b = (1.0 - lambda_dssim) * g1b - 0.5 * lambda_dssim * gsb
    return loss, grad_a, grad_b
