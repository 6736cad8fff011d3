"""Base exception shared by all modules; the CLI turns these into JSON."""


class ParacharError(Exception):
    """Any domain error raised by the library."""

    def to_json(self) -> dict:
        return {"error": type(self).__name__, "message": str(self)}


class CapExceeded(ParacharError):
    def __init__(self, predicted: int, cap: int):
        super().__init__(f"predicted order {predicted} exceeds cap {cap}")
        self.predicted = predicted
        self.cap = cap
