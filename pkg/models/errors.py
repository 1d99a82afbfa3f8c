"""
Errores del dominio
Jerarquía única para que la CLI traduzca cada caso a su código de salida
"""


class GemelosError(Exception):
    """Error base del proyecto"""


class InvalidArgumentError(GemelosError, ValueError):
    """Argumento fuera de contrato (forma, rango, valor no finito)"""


class DatasetError(GemelosError):
    """Directorio de dataset ausente o incompleto"""


class FieldFormatError(GemelosError):
    """Archivo de campo o imagen mal formado"""

    def __init__(self, message, offset=0, path=None):
        self.offset = offset
        self.path = path
        where = f"{path}: " if path else ""
        super().__init__(f"{where}{message} (byte {offset})")


class RenderError(GemelosError):
    """Parámetros no finitos al renderizar"""

    def __init__(self, message, primitive_index):
        self.primitive_index = primitive_index
        super().__init__(f"{message} (primitiva {primitive_index})")


class NumericalError(GemelosError):
    """Divergencia del entrenamiento"""

    def __init__(self, message, iteration, field_index):
        self.iteration = iteration
        self.field_index = field_index
        super().__init__(f"{message} (iteración {iteration}, campo {field_index})")
