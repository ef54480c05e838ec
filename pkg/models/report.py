from typing import Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field


class ClassMetrics(BaseModel):
    """Precision and recall per class plus the confusion matrix they come from.

    confusion[i][j] counts samples of class i predicted as class j.
    """

    model_config = ConfigDict(extra="forbid")

    class_names: List[str]
    precision: List[float]
    recall: List[float]
    support: List[int]
    accuracy: float
    macro_accuracy: float
    confusion: List[List[int]]

    def precision_of(self, label: str) -> float:
        return self.precision[self.class_names.index(label)]

    def recall_of(self, label: str) -> float:
        return self.recall[self.class_names.index(label)]


class EvalReport(BaseModel):
    model_config = ConfigDict(extra="forbid")

    rows: ClassMetrics
    flows: ClassMetrics


class TrainingCurve(BaseModel):
    model_config = ConfigDict(extra="forbid")

    train_loss: List[float] = Field(default_factory=list)
    validation_loss: List[float] = Field(default_factory=list)
    train_accuracy: List[float] = Field(default_factory=list)
    validation_accuracy: List[float] = Field(default_factory=list)
    best_epoch: int = 0

    @property
    def epochs_run(self) -> int:
        return len(self.train_loss)


class CellResult(BaseModel):
    model_config = ConfigDict(extra="forbid")

    key: str
    value: Optional[Union[float, str]] = None
    transform: str = "none"
    n_flows: int
    n_train_rows: int
    n_validation_rows: int
    n_test_rows: int
    dropped_columns: List[str] = Field(default_factory=list)
    hidden_size: int
    best_epoch: int
    epochs_run: int
    final_train_loss: float
    best_validation_accuracy: float
    report: EvalReport
    importance: Dict[str, float] = Field(default_factory=dict)


class SweepReport(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    parameter: Optional[str] = None
    seed: int
    cells: List[CellResult] = Field(default_factory=list)

    def cell(self, key: str) -> CellResult:
        for cell in self.cells:
            if cell.key == key:
                return cell
        raise KeyError(key)
