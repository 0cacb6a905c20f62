from contextlib import contextmanager
from datetime import datetime
from typing import Iterable, Iterator, Optional, Sequence

from rich.console import Console
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn, TimeElapsedColumn
from rich.table import Table
from rich.theme import Theme

# One style per pipeline stage
THEME = Theme({
    'info': 'cyan',
    'warning': 'yellow',
    'error': 'red',
    'debug': 'dim blue',
    'timestamp': 'dim white',
    'fetch': 'bold blue',
    'train': 'bold yellow',
    'evaluate': 'bold magenta',
    'done': 'bold green',
    'save': 'green',
    'header': 'bold magenta'
})


class Logger:
    """Console logger for every stage; writes to stderr."""

    def __init__(self, console: Optional[Console] = None):
        self.console = console or Console(theme=THEME, stderr=True)
        self.debug_mode = False

    def _format_message(self, message: str, style: Optional[str] = None) -> str:
        timestamp = datetime.now().strftime("%H:%M:%S")
        formatted = f"[timestamp]{timestamp}[/timestamp] {message}"
        if style:
            formatted = f"[timestamp]{timestamp}[/timestamp] [{style}]{message}[/{style}]"
        return formatted

    def info(self, message: str):
        self.console.print(self._format_message(message, "info"))

    def warning(self, message: str):
        self.console.print(self._format_message(f"⚠️  {message}", "warning"))

    def error(self, message: str):
        self.console.print(self._format_message(f"❌ {message}", "error"))

    def done(self, message: str):
        self.console.print(self._format_message(f"🎉 {message}", "done"))

    def debug(self, message: str):
        """Printed only with --debug or system.debug_mode."""
        if self.debug_mode:
            self.console.print(self._format_message(f"🔍 {message}", "debug"))

    def fetch(self, message: str):
        self.console.print(self._format_message(f"📡 {message}", "fetch"))

    def train(self, message: str):
        self.console.print(self._format_message(f"🌲 {message}", "train"))

    def evaluate(self, message: str):
        self.console.print(self._format_message(f"📊 {message}", "evaluate"))

    def save(self, message: str):
        self.console.print(self._format_message(f"💾 {message}", "save"))

    def header(self, message: str):
        self.console.print(f"\n[header]═══ {message} ═══[/header]\n")

    def table(self, title: str, columns: Sequence[str], rows: Iterable[Sequence[object]]):
        """Render rows as a rich table."""
        table = Table(title=title, header_style="cyan")
        for column in columns:
            table.add_column(column)
        for row in rows:
            table.add_row(*(str(cell) for cell in row))
        self.console.print(table)

    @contextmanager
    def progress(self, description: str, total: int) -> Iterator["_ProgressTask"]:
        """Progress bar for long loops; advance with ``task.advance()``."""
        bar = Progress(
            TextColumn("[info]{task.description}"),
            BarColumn(),
            MofNCompleteColumn(),
            TimeElapsedColumn(),
            console=self.console,
            transient=True,
        )
        with bar:
            task_id = bar.add_task(description, total=total)
            yield _ProgressTask(bar, task_id)


class _ProgressTask:
    def __init__(self, bar: Progress, task_id):
        self._bar = bar
        self._task_id = task_id

    def advance(self, steps: int = 1):
        self._bar.advance(self._task_id, steps)


log = Logger()
