from pie_ie.taskmodules.base import Skipped
from pie_ie.taskmodules.ner import NerEncoding, NerTaskConfig, NerTaskModule
from pie_ie.taskmodules.relation import ReEncoding, ReTaskConfig, ReTaskModule

__all__ = [
    "Skipped",
    "NerEncoding",
    "NerTaskConfig",
    "NerTaskModule",
    "ReEncoding",
    "ReTaskConfig",
    "ReTaskModule",
]
