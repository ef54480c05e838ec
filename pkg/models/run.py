from pathlib import Path
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field
from sqlalchemy import Column, Integer, String, Text, TIMESTAMP, func

from db.init import Base
from models.experiment import ExperimentSpec


class RunRecord(Base):
    __tablename__ = "runs"
    id = Column(Integer, primary_key=True, index=True)
    command = Column(String(50), nullable=False)
    seed = Column(Integer)
    config = Column(Text)  # JSON
    outputs = Column(Text)  # JSON list of written paths
    status = Column(String(20), nullable=False)  # OK, FAILED
    message = Column(String(500))
    created_at = Column(TIMESTAMP, server_default=func.now())


class RunConfig(BaseModel):
    """Resolved arguments of one CLI invocation."""

    model_config = ConfigDict(extra="forbid", arbitrary_types_allowed=True)

    command: str
    inputs: List[Path] = Field(default_factory=list)
    output: Optional[Path] = None
    spec: Optional[ExperimentSpec] = None
    seed: int
    workers: int = Field(default=1, ge=1)
    verbosity: int = 0
