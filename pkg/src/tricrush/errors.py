"""Exception types shared across the kernel."""


class TriCrushError(Exception):
    """Base class for all kernel errors."""


class ParseError(TriCrushError):
    """Malformed gluing-table or surface file; carries line/column info."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + where)


class ValidationRequired(TriCrushError):
    """An operation was called on a triangulation that fails validate()."""


class VertexLinkNotSurface(TriCrushError):
    """A vertex link is pinched; the input is not a pseudo-triangulation of a manifold."""

    def __init__(self, vertex, reason):
        self.vertex = vertex
        self.reason = reason
        super().__init__(f"link of vertex {vertex} is not a surface: {reason}")


class IncompatibleQuads(TriCrushError):
    """Two surfaces carry distinct quad types in the same tetrahedron."""

    def __init__(self, tet):
        self.tet = tet
        super().__init__(f"distinct quad types in tetrahedron {tet}")


class SizeExceeded(TriCrushError):
    """A configured enumeration resource cap was hit."""


class NotDisjoint(TriCrushError):
    """A surface cannot be normally isotoped off the crushing surface."""

    def __init__(self, tet, reason=""):
        self.tet = tet
        super().__init__(f"cannot realize surfaces disjointly (tetrahedron {tet}){': ' + reason if reason else ''}")


class VertexSideComponent(TriCrushError):
    """A component of the surface lies outside the crushed component X."""


class InternalInconsistency(TriCrushError):
    """A state the crushing theory rules out was reached; indicates a bug."""
