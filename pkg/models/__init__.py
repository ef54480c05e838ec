from models.run import RunRecord, RunConfig
