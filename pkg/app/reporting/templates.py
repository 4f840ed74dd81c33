"""Fixed-width text report rendering using Jinja2.

Templates live in the app.reporting.templates package directory. Output is
plain text, so autoescaping is off; undefined variables raise immediately.
"""

from typing import Any, Dict

from jinja2 import Environment, PackageLoader, StrictUndefined, TemplateError

from app.logging import get_logger

from .models import ReportTemplateError

logger = get_logger(__name__, component="reporting")


class TemplateRenderer:
    """Renders text reports from the package templates.

    Templates are cached by the Jinja2 environment for reuse across reports.
    """

    def __init__(self, template_dir: str = "templates"):
        """Initialize renderer with a Jinja2 environment.

        Args:
            template_dir: Directory name within the app.reporting package
        """
        self.env = Environment(
            loader=PackageLoader("app.reporting", template_dir),
            autoescape=False,
            undefined=StrictUndefined,
            trim_blocks=True,
            lstrip_blocks=True,
            keep_trailing_newline=True,
        )

    def render(self, template_name: str, context: Dict[str, Any]) -> str:
        """Render one template.

        Raises:
            ReportTemplateError: If the template is missing or rendering fails
        """
        try:
            return self.env.get_template(template_name).render(context)
        except TemplateError as e:
            logger.error(
                "Report template failed",
                extra={"event": "report.template.failed", "template": template_name, "error": str(e)},
            )
            raise ReportTemplateError(f"Template rendering failed for {template_name}: {e}") from e
