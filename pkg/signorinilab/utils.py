"""
Utility module for signorinilab CLI styling and output functions.

This module provides standardized styling functions for the signorinilab CLI
using the Rich library. It follows the Pokemon-themed function naming convention
with Fighting-type Pokemon for system operations.

Author: David Diaz (https://github.com/alfdav)
Version: 1.0.0
"""
import logging
from typing import Any, Dict, Optional

from rich import box
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.panel import Panel
from rich.rule import Rule
from rich.table import Table
from rich.theme import Theme

from signorinilab import __version__

# Define custom theme matching standards
custom_theme = Theme({
    # Base colors
    "info": "blue",
    "warning": "yellow",
    "error": "red",
    "success": "green",
    "header": "cyan bold",

    # Additional styles
    "path": "cyan",
    "number": "magenta",
    "dim": "dim",
    "bold": "bold",
    "title": "cyan bold"
})

# Main console instance
console = Console(theme=custom_theme)

# Error console (stderr)
error_console = Console(stderr=True, theme=custom_theme)

# Status indicators dictionary with standardized styling
STATUS = {
    "info": "[blue][[/blue][bold white]*[/bold white][blue]][/blue]",
    "success": "[green][[/green][bold white]✓[/bold white][green]][/green]",
    "warning": "[yellow][[/yellow][bold white]![/bold white][yellow]][/yellow]",
    "error": "[red][[/red][bold white]✗[/bold white][red]][/red]"
}


def hitmonchan_setup_logging(verbose: bool = False) -> None:
    """Route library log records through a Rich handler on stderr.

    Args:
        verbose: DEBUG level when True, WARNING otherwise
    """
    logger = logging.getLogger("signorinilab")
    for handler in list(logger.handlers):
        if isinstance(handler, RichHandler):
            logger.removeHandler(handler)
    handler = RichHandler(console=error_console, show_path=False, rich_tracebacks=True)
    handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
    logger.addHandler(handler)
    logger.setLevel(logging.DEBUG if verbose else logging.WARNING)


def hitmonchan_show_banner() -> None:
    """Display application banner with standardized styling."""
    content = (
        f"[bold]signorinilab v{__version__}[/bold] - "
        "[italic]Parabolic thin obstacle laboratory[/italic]\n\n"
        f"[dim]Version: {__version__}[/dim]"
    )
    banner = Panel(
        content,
        border_style="blue",
        subtitle="By David Diaz (https://github.com/alfdav)",
        expand=False
    )
    console.print(banner)


def primeape_show_error(message: str, exception: Optional[Exception] = None) -> None:
    """Display error message with optional exception details.

    Args:
        message: The error message to display
        exception: Optional exception to display details for
    """
    error_panel = Panel(
        f"[bold red]ERROR:[/bold red] {message}",
        border_style="red",
        title="Error"
    )
    error_console.print(error_panel)

    if exception and str(exception):
        error_console.print(f"[dim]{escape(str(exception))}[/dim]", markup=True, highlight=False)


def primeape_show_warning(message: str, title: str = "Warning") -> None:
    """Display warning message in a styled panel.

    Args:
        message: The warning message to display
        title: The title of the warning panel
    """
    warning_panel = Panel(
        f"[bold yellow]WARNING:[/bold yellow] {escape(message)}",
        border_style="yellow",
        title=title,
        expand=True
    )
    console.print(warning_panel)


def hitmonchan_show_success(message: str) -> None:
    """Display success message with a checkmark indicator."""
    console.print(f"{STATUS['success']} {message}")


def hitmonchan_show_progress(message: str) -> None:
    """Display a progress step with the info indicator."""
    console.print(f"{STATUS['info']} {escape(message)}")


def create_table(title: str) -> Table:
    """Create a table with the given title and standardized styling."""
    table = Table(
        title=title,
        title_style="header",
        box=box.ROUNDED,
        header_style="bold cyan"
    )
    return table


def create_section(title: str) -> None:
    """Create a section header with a rule."""
    console.print(Rule(title=f"[bold cyan]{escape(title)}[/bold cyan]", style="cyan"))


def kadabra_display_checks(checks: Dict[str, Dict[str, Any]]) -> None:
    """Display threshold checks of a run as a table.

    Args:
        checks: check name -> {"value": ..., "expected": ..., "passed": bool}
    """
    table = create_table("Checks")
    table.add_column("Check", style="bold")
    table.add_column("Value", style="number")
    table.add_column("Expected")
    table.add_column("Status")
    for name in sorted(checks):
        check = checks[name]
        status = STATUS["success"] if check.get("passed") else STATUS["error"]
        table.add_row(name, str(check.get("value")), escape(str(check.get("expected"))), status)
    console.print(table)
