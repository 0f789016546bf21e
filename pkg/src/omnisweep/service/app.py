"""HTTP surface over the pipeline: generate / run / ablate / report."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import pipeline
from .schemas import (
    AblateRequest,
    AblateResponse,
    ExperimentConfigModel,
    GenerateResponse,
    MetricsModel,
    ReportRequest,
    ReportResponse,
    RunResponse,
)


def create_app() -> FastAPI:
    app = FastAPI(title="omnisweep", version="0.1.0")

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/generate", response_model=GenerateResponse)
    def generate(config: ExperimentConfigModel):
        try:
            return GenerateResponse(**pipeline.generate(config.to_config()))
        except (ValueError, OSError) as e:
            raise HTTPException(status_code=400, detail=str(e))

    @app.post("/run", response_model=RunResponse)
    def run(config: ExperimentConfigModel):
        try:
            result = pipeline.run(config.to_config())
        except FileNotFoundError as e:
            raise HTTPException(status_code=404, detail=str(e))
        except (ValueError, OSError) as e:
            raise HTTPException(status_code=400, detail=str(e))
        per_sample = [
            MetricsModel.from_metrics(label, m)
            for label, m in result.rows
            if label != "summary"
        ]
        return RunResponse(
            summary=MetricsModel.from_metrics("summary", result.summary),
            per_sample=per_sample,
            metrics_csv=result.csv_path,
        )

    @app.post("/ablate", response_model=AblateResponse)
    def ablate(request: AblateRequest):
        try:
            result = pipeline.ablate(request.config.to_config(), request.variants)
        except FileNotFoundError as e:
            raise HTTPException(status_code=404, detail=str(e))
        except (ValueError, OSError) as e:
            raise HTTPException(status_code=400, detail=str(e))
        return AblateResponse(
            rows=[MetricsModel.from_metrics(label, m) for label, m in result.rows],
            csv_path=result.csv_path,
        )

    @app.post("/report", response_model=ReportResponse)
    def report(request: ReportRequest):
        try:
            text = pipeline.report(
                [(e.label, e.metrics_csv) for e in request.entries],
                request.output_path,
            )
        except FileNotFoundError as e:
            raise HTTPException(status_code=404, detail=str(e))
        except (ValueError, OSError) as e:
            raise HTTPException(status_code=400, detail=str(e))
        return ReportResponse(csv_text=text, output_path=request.output_path)

    return app
