"""Exception hierarchy shared by all modules.

Everything raised on purpose derives from :class:`PieError` so the CLI can map
hard failures to exit codes without catching unrelated bugs.
"""


class PieError(Exception):
    pass


# schema validation


class SchemaError(PieError):
    def __init__(self, layer, rule, message=None):
        self.layer = layer
        self.rule = rule
        super().__init__(message or f"layer {layer!r}: {rule}")


class DuplicateLayerError(SchemaError):
    def __init__(self, layer):
        super().__init__(layer, "duplicate_layer", f"layer {layer!r} is declared more than once")


class UnknownTargetError(SchemaError):
    def __init__(self, layer, target):
        self.target = target
        super().__init__(
            layer, "unknown_target", f"layer {layer!r} targets unknown name {target!r}"
        )


class CycleError(SchemaError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__(
            self.cycle[0], "cycle", "layer references form a cycle: " + " -> ".join(self.cycle + self.cycle[:1])
        )


class KindTargetMismatchError(SchemaError):
    pass


# document construction


class AnnotationError(PieError):
    pass


class OffsetOutOfBoundsError(AnnotationError):
    pass


class DanglingReferenceError(AnnotationError):
    pass


class KindMismatchError(AnnotationError):
    pass


class DuplicateAnnotationError(AnnotationError):
    pass


class UnknownLayerError(PieError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown layer"


class SealedDocumentError(PieError):
    pass


# parsing


class ParseError(PieError):
    pass


class SchemaMismatchError(ParseError):
    pass


class ForwardReferenceError(ParseError):
    pass


class VersionMismatchError(ParseError):
    pass


# tokenization


class AlignmentError(PieError):
    def __init__(self, start, end, nearest_start, nearest_end):
        self.start = start
        self.end = end
        self.nearest_start = nearest_start
        self.nearest_end = nearest_end
        super().__init__(
            f"char span ({start}, {end}) does not align with token boundaries "
            f"(nearest token start {nearest_start}, nearest token end {nearest_end})"
        )


class IndexOutOfRangeError(PieError, IndexError):
    pass


# task modules


class OverlapError(PieError):
    pass


class TagVocabularyError(PieError, ValueError):
    pass


class MultiLabelError(PieError):
    pass


class UnknownLabelError(PieError, ValueError):
    pass


class ConfigError(PieError, ValueError):
    pass


# models


class EmptyTrainingSetError(PieError):
    pass


class SingleClassWarning(UserWarning):
    pass
