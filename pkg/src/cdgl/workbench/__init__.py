from .elaborate import Workspace, load_model, workspace_from_text
from .parser import Diagnostic, parse_document
from .report import Report, canonical, human, render
from .tasks import Task, run_task

__all__ = ["Workspace", "load_model", "workspace_from_text", "Diagnostic",
           "parse_document", "Report", "canonical", "human", "render",
           "Task", "run_task"]
