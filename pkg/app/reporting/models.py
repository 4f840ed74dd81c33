"""Report header metadata and reporting exceptions."""

from dataclasses import dataclass, field
from typing import Dict, List, Optional

from app import __version__


class ReportError(Exception):
    """Base exception for report output errors."""

    pass


class ReportTemplateError(ReportError):
    """Raised when a report template fails to render."""

    pass


@dataclass(frozen=True)
class ReportHeader:
    """Audit-trail block written at the top of every output file.

    Attributes:
        command: Subcommand that produced the file
        seed: Seed of the run (None when the command draws nothing at random)
        config_fingerprint: Fingerprint of the effective configuration
        corpus_fingerprint: Fingerprint of the input corpus, if any
        extra: Additional key/value lines (e.g. gmm_source)
    """

    command: str
    seed: Optional[int] = None
    config_fingerprint: Optional[str] = None
    corpus_fingerprint: Optional[str] = None
    extra: Dict[str, str] = field(default_factory=dict)
    version: str = __version__

    def lines(self) -> List[str]:
        """Header lines, each starting with '# '."""
        lines = [f"# merge-states {self.version}", f"# command: {self.command}"]
        if self.seed is not None:
            lines.append(f"# seed: {self.seed}")
        if self.config_fingerprint:
            lines.append(f"# config: {self.config_fingerprint}")
        if self.corpus_fingerprint:
            lines.append(f"# corpus: {self.corpus_fingerprint}")
        for key, value in self.extra.items():
            lines.append(f"# {key}: {value}")
        return lines

    def render(self) -> str:
        return "\n".join(self.lines()) + "\n"
