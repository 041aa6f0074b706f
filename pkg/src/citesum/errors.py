"""Exception hierarchy shared by every citesum module.

All library errors derive from :class:`CiteSumError` so callers (and the CLI)
can map validation failures to a single exit status.
"""


class CiteSumError(Exception):
    """Base class for recoverable validation errors."""


# corpus
class MalformedJson(CiteSumError):
    pass


class MissingUid(CiteSumError):
    pass


class EmptyResult(CiteSumError):
    pass


class TooFewSamples(CiteSumError):
    pass


class UnknownSplit(CiteSumError):
    pass


# citegraph
class DanglingEdge(CiteSumError):
    pass


class UnknownSeed(CiteSumError):
    pass


# tokenizer
class CorpusTooSmall(CiteSumError):
    pass


class UnknownId(CiteSumError):
    pass


# model
class NoCitations(CiteSumError):
    pass


class ShapeMismatch(CiteSumError):
    pass


class PrefixTooLong(CiteSumError):
    pass


class Divergence(CiteSumError):
    def __init__(self, step, value):
        super().__init__(f"loss became non-finite ({value}) at step {step}")
        self.step = step
        self.value = value


# baselines / metrics
class EmptyDocument(CiteSumError):
    pass


class EmptyReference(CiteSumError):
    pass


class EmptyText(CiteSumError):
    pass


class MissingReference(CiteSumError):
    def __init__(self, uid):
        super().__init__(f"no reference for prediction uid {uid!r}")
        self.uid = uid
