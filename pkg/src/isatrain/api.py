"""Versioned HTTP+JSON API over a PlatformService.

Bearer tokens authenticate users (issued at registration); the admin token
guards the tick and analytics endpoints.  Challenge responses may carry
credential text from the mock login forms - it is reduced to a boolean before
it can reach any persisted byte.
"""

from __future__ import annotations

from typing import Any

from fastapi import Depends, FastAPI, Header, HTTPException
from pydantic import BaseModel, Field

from . import analytics
from .service import (AuthorizationError, ConflictError, NotReadyError, PlatformService,
                      TickOrderError, UnknownInstanceError, UnknownUserError,
                      ValidationFailed)
from .taxonomy import RawMetric


class MetricIn(BaseModel):
    criterion_id: str
    value: float | None = None
    sub_values: dict[str, float] | None = None


class TelemetryIn(BaseModel):
    user_id: str
    day: int
    metrics: list[MetricIn]
    revision: bool = False


class ResponseIn(BaseModel):
    decisions: list[str]
    instance_id: str | None = None  # optional echo of the path id (channel contract)
    # Mock login fields land here; only their presence is ever recorded.
    credentials: dict[str, Any] | None = None


class ViewIn(BaseModel):
    screen: str = Field(pattern="^(home|learning|leaderboard)$")


class TickIn(BaseModel):
    day: int


def create_app(service: PlatformService, admin_token: str = "admin") -> FastAPI:
    app = FastAPI(title="isatrain platform", version="1")

    def bearer(authorization: str | None = Header(default=None)) -> str:
        if not authorization or not authorization.startswith("Bearer "):
            raise HTTPException(status_code=401, detail="missing bearer token")
        return authorization.removeprefix("Bearer ")

    def require_user(user_id: str, token: str) -> None:
        if user_id not in service.users:
            raise HTTPException(status_code=404, detail=f"unknown user {user_id}")
        account = service.user_by_token(token)
        if account is None or account.user_id != user_id:
            raise HTTPException(status_code=403, detail="token does not match user")

    def require_admin(token: str) -> None:
        if token != admin_token:
            raise HTTPException(status_code=403, detail="admin token required")

    def translate(exc: Exception) -> HTTPException:
        if isinstance(exc, UnknownUserError) or isinstance(exc, UnknownInstanceError):
            return HTTPException(status_code=404, detail=str(exc))
        if isinstance(exc, AuthorizationError):
            return HTTPException(status_code=403, detail=str(exc))
        if isinstance(exc, ConflictError):
            return HTTPException(status_code=409, detail=str(exc))
        if isinstance(exc, ValidationFailed):
            return HTTPException(status_code=422, detail=exc.report)
        if isinstance(exc, (NotReadyError, TickOrderError)):
            return HTTPException(status_code=409, detail=str(exc))
        raise exc

    @app.post("/v1/telemetry")
    def post_telemetry(body: TelemetryIn, token: str = Depends(bearer)):
        require_user(body.user_id, token)
        metrics = [RawMetric(criterion_id=m.criterion_id,
                             value=m.value if m.value is not None else 0.0,
                             sub_values=m.sub_values)
                   for m in body.metrics]
        try:
            seq = service.ingest_snapshot(body.user_id, body.day, metrics, body.revision)
        except Exception as exc:  # noqa: BLE001 - translated to HTTP semantics
            raise translate(exc) from exc
        return {"accepted": True, "seq": seq}

    @app.get("/v1/users/{user_id}/home")
    def get_home(user_id: str, token: str = Depends(bearer)):
        require_user(user_id, token)
        return service.serve_home(user_id)

    @app.get("/v1/users/{user_id}/learning")
    def get_learning(user_id: str, view: bool = True, token: str = Depends(bearer)):
        require_user(user_id, token)
        try:
            return service.serve_learning(user_id, log_view=view)
        except Exception as exc:
            raise translate(exc) from exc

    @app.get("/v1/leaderboard")
    def get_leaderboard(token: str = Depends(bearer)):
        if service.user_by_token(token) is None and token != admin_token:
            raise HTTPException(status_code=403, detail="unknown token")
        return service.serve_leaderboard()

    @app.get("/v1/users/{user_id}/challenges/pending")
    def get_pending(user_id: str, token: str = Depends(bearer)):
        require_user(user_id, token)
        return service.pending_challenges(user_id)

    @app.post("/v1/challenges/{instance_id}/response")
    def post_response(instance_id: str, body: ResponseIn, token: str = Depends(bearer)):
        account = service.user_by_token(token)
        if account is None:
            raise HTTPException(status_code=403, detail="unknown token")
        if body.instance_id is not None and body.instance_id != instance_id:
            raise HTTPException(status_code=422, detail="instance_id mismatch")
        try:
            return service.submit_response(account.user_id, instance_id,
                                           body.decisions, body.credentials)
        except Exception as exc:
            raise translate(exc) from exc

    @app.post("/v1/users/{user_id}/views")
    def post_view(user_id: str, body: ViewIn, token: str = Depends(bearer)):
        require_user(user_id, token)
        try:
            seq = service.record_view(user_id, body.screen)
        except Exception as exc:
            raise translate(exc) from exc
        return {"recorded": True, "seq": seq}

    @app.post("/v1/admin/tick")
    def post_tick(body: TickIn, token: str = Depends(bearer)):
        require_admin(token)
        try:
            summary = service.midnight_tick(body.day)
        except Exception as exc:
            raise translate(exc) from exc
        return {
            "day": summary.day,
            "repeated": summary.repeated,
            "calibrated": summary.calibrated,
            "scored_users": sorted(summary.records),
            "state_hash": service.state_hash(),
        }

    @app.get("/v1/analytics/experiment")
    def get_analytics(token: str = Depends(bearer)):
        require_admin(token)
        records = service.log.records
        payload: dict[str, Any] = {"curves": analytics.group_curves(records)}
        try:
            corr = analytics.analyze_views(records)
            payload["correlation"] = {
                "r": corr.r, "p": corr.p,
                "r_distinct_days": corr.r_distinct_days,
                "p_distinct_days": corr.p_distinct_days,
                "pairs": corr.pairs,
            }
        except (analytics.AnalyticsError, ValueError):
            payload["correlation"] = None
        return payload

    return app
