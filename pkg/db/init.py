import logging

from sqlalchemy import create_engine
from sqlalchemy.orm import declarative_base, sessionmaker

from utils.config import RUN_DATABASE_URL

logger = logging.getLogger(__name__)

connect_args = {"check_same_thread": False} if RUN_DATABASE_URL.startswith("sqlite") else {}

engine = create_engine(
    RUN_DATABASE_URL,
    pool_pre_ping=True,
    connect_args=connect_args,
)
SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)

Base = declarative_base()


def init_db():
    # Import models here to register them with Base
    from models import run  # noqa: F401
    try:
        logger.info("Initializing run registry tables...")
        Base.metadata.create_all(bind=engine)
        logger.info("Run registry ready.")
    except Exception as e:
        # Registry failures never fail the run
        logger.warning(f"Run registry initialization skipped: {e}")
