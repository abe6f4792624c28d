"""Thin HTTP client for the service.

Without a server URL the client mounts the application in-process (same wire
format, no socket), so the CLI works standalone while keeping every decision
behind the service API.
"""

from __future__ import annotations

import warnings
from typing import Any, Sequence

import httpx


class ServiceError(RuntimeError):
    def __init__(self, status_code: int, detail: str) -> None:
        super().__init__(f"service returned {status_code}: {detail}")
        self.status_code = status_code
        self.detail = detail


class ServiceClient:
    """Typed convenience wrapper over the service endpoints."""

    def __init__(self, base_url: str | None = None) -> None:
        if base_url:
            self._client: httpx.Client = httpx.Client(base_url=base_url, timeout=600.0)
        else:
            with warnings.catch_warnings():
                # fastapi's testclient module warns about its own httpx usage
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import create_app

            self._client = TestClient(create_app())

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "ServiceClient":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def _json(self, response: httpx.Response) -> Any:
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail", response.text)
            except ValueError:
                detail = response.text
            raise ServiceError(response.status_code, str(detail))
        return response.json()

    def get(self, path: str, **kwargs) -> Any:
        return self._json(self._client.get(path, **kwargs))

    def post(self, path: str, payload: dict | None = None, **kwargs) -> Any:
        return self._json(self._client.post(path, json=payload, **kwargs))

    # -- sessions ------------------------------------------------------------

    def create_session(
        self,
        space: dict,
        constraints: Sequence[dict] = (),
        mode: str = "ctpe",
        params: dict | None = None,
        seed: int = 0,
    ) -> dict:
        payload = {
            "space": space,
            "constraints": list(constraints),
            "mode": mode,
            "seed": seed,
        }
        if params is not None:
            payload["params"] = params
        return self.post("/sessions", payload)

    def import_session(self, state: dict) -> dict:
        return self.post("/sessions/import", {"state": state})

    def session_info(self, session_id: str) -> dict:
        return self.get(f"/sessions/{session_id}")

    def delete_session(self, session_id: str) -> dict:
        return self._json(self._client.delete(f"/sessions/{session_id}"))

    def ask(self, session_id: str) -> list:
        return self.post(f"/sessions/{session_id}/ask")["config"]

    def propose(self, session_id: str) -> dict:
        return self.post(f"/sessions/{session_id}/propose")

    def tell(
        self,
        session_id: str,
        config: Sequence,
        objective: float | None = None,
        constraints: Sequence[float | None] | None = None,
        hard_ok: Sequence[bool | None] | None = None,
    ) -> dict:
        return self.post(
            f"/sessions/{session_id}/tell",
            {
                "config": list(config),
                "objective": objective,
                "constraints": None if constraints is None else list(constraints),
                "hard_ok": None if hard_ok is None else list(hard_ok),
            },
        )

    def tell_partial(
        self, session_id: str, config: Sequence, constraints: Sequence[float | None]
    ) -> dict:
        return self.post(
            f"/sessions/{session_id}/tell-partial",
            {"config": list(config), "constraints": list(constraints)},
        )

    def best(self, session_id: str) -> dict:
        return self.get(f"/sessions/{session_id}/best")

    def export_session(self, session_id: str) -> dict:
        return self.get(f"/sessions/{session_id}/export")

    # -- problems ------------------------------------------------------------

    def problems(self) -> list[str]:
        return self.get("/problems")["problems"]

    def problem_info(self, name: str) -> dict:
        return self.get(f"/problems/{name}")

    def oracle(
        self,
        name: str,
        thresholds: Sequence[float] | None = None,
        recompute: bool = False,
        grid_points: int = 10**6,
    ) -> dict:
        params: dict[str, Any] = {"recompute": recompute, "grid_points": grid_points}
        if thresholds is not None:
            params["threshold"] = list(thresholds)
        return self.get(f"/problems/{name}/oracle", params=params)

    def calibrate_thresholds(
        self, name: str, gamma_true: Sequence[float], n_grid: int = 10**6, seed: int = 0
    ) -> list[float]:
        response = self.post(
            f"/problems/{name}/threshold",
            {"gamma_true": list(gamma_true), "n_grid": n_grid, "seed": seed},
        )
        return response["thresholds"]

    # -- experiments -----------------------------------------------------------

    def run_cell(
        self,
        problem: str,
        thresholds: Sequence[float],
        method: str,
        seed: int,
        budget: int,
        n_init: int = 10,
        n_samples: int = 24,
        n_partial: int = 0,
        cheap: Sequence[int] = (),
        gamma_true: Sequence[float] | None = None,
    ) -> dict:
        return self.post(
            "/experiments/cell",
            {
                "problem": problem,
                "thresholds": list(thresholds),
                "method": method,
                "seed": seed,
                "budget": budget,
                "n_init": n_init,
                "n_samples": n_samples,
                "n_partial": n_partial,
                "cheap": list(cheap),
                "gamma_true": None if gamma_true is None else list(gamma_true),
            },
        )

    def summarize(
        self,
        documents: Sequence[tuple[dict, list[dict]]],
        checkpoints: Sequence[int] | None = None,
    ) -> dict:
        return self.post(
            "/experiments/summarize",
            {
                "logs": [{"header": h, "records": r} for h, r in documents],
                "checkpoints": None if checkpoints is None else list(checkpoints),
            },
        )
