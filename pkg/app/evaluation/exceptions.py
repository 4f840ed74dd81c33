"""Exceptions raised while scoring predictions."""


class EvaluationError(Exception):
    """Base exception for evaluation errors."""

    pass


class UndefinedSkillScoreError(EvaluationError):
    """The reference output is constant, so the skill score has no baseline."""

    def __init__(self, message: str, event_id: str = "") -> None:
        super().__init__(message)
        self.event_id = event_id
