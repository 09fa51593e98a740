from dotenv import load_dotenv
import os

load_dotenv()

class Settings:
    SINGULARLAB_CONFIG = os.getenv("SINGULARLAB_CONFIG")
    SINGULARLAB_LOGGING = os.getenv("SINGULARLAB_LOGGING")
    CELERY_BROKER_URL = os.getenv("CELERY_BROKER_URL")
    CELERY_RESULT_BACKEND = os.getenv("CELERY_RESULT_BACKEND")

settings = Settings()
