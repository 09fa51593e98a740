from celery import group

from singularlab.celery import app
from singularlab.config import Config, build_config
from singularlab.experiment import SampleResult, SurveyReport, SurveySpec, classify_sample as classify


@app.task
def classify_sample(spec_json: dict, index: int, config_json: dict | None = None) -> dict:
    """
    Classifies one survey sample on a worker.

    The sample is drawn from its own (seed, index) stream, so the result does not
    depend on which worker runs it or in which order the group completes.

    Args:
        spec_json (dict): The survey spec as produced by `SurveySpec.to_json`.
        index (int): The sample index, 0 <= index < sample_count.
        config_json (dict | None): The resolved run config; defaults apply when omitted.

    Returns:
        dict: The `SampleResult` of the sample, serialized with `to_json`.
    """
    config = build_config(config_json) if config_json else Config()
    return classify(SurveySpec.from_json(spec_json), index, config).to_json()


def run_survey_distributed(spec: SurveySpec, config: Config) -> SurveyReport:
    """
    Runs a survey as a group of `classify_sample` tasks and reduces in index order.

    Args:
        spec (SurveySpec): The survey to run.
        config (Config): The resolved run config, shipped to every task.

    Returns:
        SurveyReport: The same report `experiment.run_survey` builds in-process.
    """
    spec_json, config_json = spec.to_json(), config.model_dump(mode="json")
    # Dispatching one task per sample
    job = group(classify_sample.s(spec_json, index, config_json) for index in range(spec.sample_count))
    results = job.apply_async().get()

    # Reducing in sample-index order
    samples = [SampleResult.from_json(payload) for payload in results]
    return SurveyReport.build(spec, samples)
