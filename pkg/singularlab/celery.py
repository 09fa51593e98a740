from celery import Celery

from settings import settings

# Initializing Celery
app = Celery('singularlab', broker=settings.CELERY_BROKER_URL or 'memory://')
app.conf.result_backend = settings.CELERY_RESULT_BACKEND or 'cache+memory://'

# Settings for Celery
app.conf.task_routes = {
    'singularlab.tasks.classify_sample': {'queue': 'surveys'},
}

app.autodiscover_tasks(['singularlab'])

# Without a broker every task runs in-process
app.conf.update(
    result_expires=3600,
    accept_content=['json'],
    task_serializer='json',
    result_serializer='json',
    task_always_eager=not settings.CELERY_BROKER_URL,
    task_eager_propagates=True,
)
