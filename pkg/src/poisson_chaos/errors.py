"""Exception types and the divergence marker."""


class DomainError(ValueError):
    """An argument lies outside the domain where a formula is defined."""


class SizeError(ValueError):
    """An order or level exceeds the supported cap."""


class AtomClash(ValueError):
    """Adding an atom at a position that is already occupied."""


class AtomMissing(KeyError):
    """Removing an atom at a position that is not occupied."""


class ConfigError(ValueError):
    """Malformed experiment or measure configuration."""

    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


class Diverges:
    """Marker returned in place of an infinite quantity (e.g. the mass of an infinite Levy measure)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "DIVERGES"

    def __bool__(self):
        return False

    def __reduce__(self):
        return (Diverges, ())


DIVERGES = Diverges()
