"""
Lectura y escritura de campos, imágenes crudas y cámaras
Cada archivo binario es una línea de cabecera JSON seguida de arreglos little-endian
"""

import json
import os

import numpy as np

from models.camera import Camera
from models.errors import FieldFormatError
from models.gaussian_field import PARAMETER_NAMES, PARAMETER_WIDTHS, GaussianField
from models.image_buffer import ImageBuffer

FORMAT_VERSION = 1
FIELD_FORMAT = "gemelos-field"
IMAGE_FORMAT = "gemelos-image"
ACCEPTED_DTYPES = ("<f8", "<f4")


def _write_blob(path, header, arrays):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "wb") as f:
        f.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        for array in arrays:
            f.write(np.ascontiguousarray(array, dtype="<f8").tobytes())


def _read_blob(path, expected_format):
    """Devuelve (cabecera, {nombre: arreglo}) validando la cabecera y el tamaño"""
    with open(path, "rb") as f:
        data = f.read()
    newline = data.find(b"\n")
    if newline < 0:
        raise FieldFormatError("cabecera sin fin de línea", offset=len(data), path=path)
    try:
        header = json.loads(data[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FieldFormatError(f"cabecera mal formada: {e}", offset=0, path=path)
    if not isinstance(header, dict) or header.get("format") != expected_format:
        raise FieldFormatError(f"se esperaba formato '{expected_format}'", offset=0, path=path)
    if header.get("version") != FORMAT_VERSION:
        raise FieldFormatError(
            f"versión {header.get('version')} no soportada (se espera {FORMAT_VERSION})",
            offset=0, path=path)

    offset = newline + 1
    arrays = {}
    for entry in header.get("arrays", []):
        try:
            name, dtype, shape = entry["name"], entry["dtype"], tuple(int(n) for n in entry["shape"])
        except (KeyError, TypeError, ValueError):
            raise FieldFormatError("descripción de arreglo inválida", offset=0, path=path)
        if dtype not in ACCEPTED_DTYPES:
            raise FieldFormatError(f"dtype '{dtype}' no soportado", offset=0, path=path)
        nbytes = int(np.prod(shape)) * np.dtype(dtype).itemsize
        if offset + nbytes > len(data):
            raise FieldFormatError(
                f"contenido truncado en '{name}': faltan {offset + nbytes - len(data)} bytes",
                offset=len(data), path=path)
        arrays[name] = np.frombuffer(data, dtype=dtype, count=int(np.prod(shape)), offset=offset) \
            .astype(np.float64).reshape(shape)
        offset += nbytes
    if offset != len(data):
        raise FieldFormatError(f"{len(data) - offset} bytes sobrantes", offset=offset, path=path)
    return header, arrays


def save_field(field, path, name="field"):
    """Guarda un campo; la lectura posterior es idéntica bit a bit"""
    arrays = field.parameter_arrays()
    header = {
        "format": FIELD_FORMAT,
        "version": FORMAT_VERSION,
        "name": name,
        "count": field.count,
        "arrays": [
            {"name": key, "dtype": "<f8", "shape": list(arrays[key].shape)}
            for key in PARAMETER_NAMES
        ],
    }
    _write_blob(path, header, [arrays[key] for key in PARAMETER_NAMES])
    return path


def load_field(path):
    """Carga un campo guardado con save_field"""
    header, arrays = _read_blob(path, FIELD_FORMAT)
    count = header.get("count")
    if not isinstance(count, int) or count < 0:
        raise FieldFormatError("conteo inválido en la cabecera", offset=0, path=path)
    for key in PARAMETER_NAMES:
        if key not in arrays:
            raise FieldFormatError(f"falta el arreglo '{key}'", offset=0, path=path)
        width = PARAMETER_WIDTHS[key]
        expected = (count,) if width == 1 else (count, width)
        if arrays[key].shape != expected:
            raise FieldFormatError(
                f"'{key}' tiene forma {arrays[key].shape}, se esperaba {expected}",
                offset=0, path=path)
    return GaussianField(**{key: arrays[key] for key in PARAMETER_NAMES})


def save_image_raw(image, path):
    pixels = image.pixels
    header = {
        "format": IMAGE_FORMAT,
        "version": FORMAT_VERSION,
        "width": image.width,
        "height": image.height,
        "channels": image.channels,
        "arrays": [{"name": "pixels", "dtype": "<f8", "shape": list(pixels.shape)}],
    }
    _write_blob(path, header, [pixels])
    return path


def load_image_raw(path):
    _, arrays = _read_blob(path, IMAGE_FORMAT)
    if "pixels" not in arrays:
        raise FieldFormatError("falta el arreglo 'pixels'", offset=0, path=path)
    return ImageBuffer(arrays["pixels"])


def save_png(image, path):
    """Vista previa de 8 bits; la profundidad se normaliza por su máximo"""
    from PIL import Image as PILImage

    pixels = image.pixels
    if image.channels == 1:
        peak = pixels.max()
        pixels = pixels / peak if peak > 0 else pixels
        data = np.round(np.clip(pixels[:, :, 0], 0.0, 1.0) * 255).astype(np.uint8)
        img = PILImage.fromarray(data)
    else:
        data = np.round(np.clip(pixels, 0.0, 1.0) * 255).astype(np.uint8)
        img = PILImage.fromarray(data)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    img.save(path)
    return path


def save_cameras(cameras_by_split, path):
    """Guarda {"train": [...], "test": [...]} como documento JSON"""
    document = {split: [camera.to_dict() for camera in cameras] for split, cameras in cameras_by_split.items()}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(document, f, indent=4)
    return path


def load_cameras(path):
    with open(path, "r", encoding="utf-8") as f:
        document = json.load(f)
    return {split: [Camera.from_dict(entry) for entry in entries] for split, entries in document.items()}
