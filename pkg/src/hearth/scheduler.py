"""One-shot timer jobs with deterministic resolution and a grace policy.

Jobs fire at the first tick whose instant reaches their fire time.  A job
that is already overdue when its tick arrives still fires if it is no
later than the grace window; beyond that it is marked missed and changes
nothing.  Ties resolve in creation order, so of two jobs due at the same
instant on the same channel the later-created one wins.  Fired, missed and
cancelled are terminal states: no job ever fires twice.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, replace
from datetime import datetime, timezone, tzinfo
from enum import Enum
from typing import Callable

from .clock import Clock, parse_rfc3339
from .errors import ClockRegressionError, UnknownChannelError, UnknownJobError
from .registry import Power

DEFAULT_GRACE_S = 60.0


class JobStatus(str, Enum):
    PENDING = "pending"
    FIRED = "fired"
    MISSED = "missed"
    CANCELLED = "cancelled"


@dataclass(frozen=True)
class TimerJob:
    id: str
    fire_at: datetime
    channel: int
    desired: Power
    seq: int
    status: JobStatus


class TimerScheduler:
    """Owns the job table; resolution side effects go through callbacks.

    `on_fired(job)` is responsible for applying the state change (the
    service wires it to the registry); `on_missed(job)` only observes.
    Neither callback runs for cancelled jobs.
    """

    def __init__(
        self,
        clock: Clock,
        grace_s: float = DEFAULT_GRACE_S,
        on_fired: Callable[[TimerJob], None] | None = None,
        on_missed: Callable[[TimerJob], None] | None = None,
        channel_ok: Callable[[int], bool] | None = None,
        default_tz: tzinfo = timezone.utc,
    ):
        if grace_s < 0:
            raise ValueError("grace window must be >= 0")
        self._clock = clock
        self._grace_s = grace_s
        self._on_fired = on_fired
        self._on_missed = on_missed
        self._channel_ok = channel_ok if channel_ok is not None else lambda c: 0 <= c <= 7
        self._default_tz = default_tz
        self._jobs: dict[str, TimerJob] = {}
        self._next_seq = 1
        self._last_tick: datetime | None = None
        self._lock = threading.RLock()

    @property
    def grace_s(self) -> float:
        return self._grace_s

    @property
    def last_tick(self) -> datetime | None:
        return self._last_tick

    def add_job(self, fire_at, channel: int, desired) -> TimerJob:
        """Store a pending job; past-due times are legal and resolve on the
        next tick under the grace policy."""
        if isinstance(fire_at, str):
            fire_at = parse_rfc3339(fire_at, self._default_tz)
        if fire_at.tzinfo is None:
            fire_at = fire_at.replace(tzinfo=self._default_tz)
        desired = Power.parse(desired)
        if not self._channel_ok(channel):
            raise UnknownChannelError(f"no registered appliance on channel {channel!r}")
        with self._lock:
            job = TimerJob(
                id=uuid.uuid4().hex[:12],
                fire_at=fire_at,
                channel=channel,
                desired=desired,
                seq=self._next_seq,
                status=JobStatus.PENDING,
            )
            self._next_seq += 1
            self._jobs[job.id] = job
            return job

    def restore_job(self, job: TimerJob) -> TimerJob:
        """Re-arm a persisted pending job, keeping its id, seq and fire time."""
        with self._lock:
            restored = replace(job, status=JobStatus.PENDING)
            self._jobs[restored.id] = restored
            self._next_seq = max(self._next_seq, restored.seq + 1)
            return restored

    def cancel_job(self, job_id: str) -> TimerJob:
        """Cancel if still pending; resolved jobs are returned unchanged."""
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise UnknownJobError(f"unknown timer job: {job_id!r}")
            if job.status is JobStatus.PENDING:
                job = replace(job, status=JobStatus.CANCELLED)
                self._jobs[job_id] = job
            return job

    def tick(self, now: datetime | None = None) -> list[TimerJob]:
        """Resolve every job due at `now`; returns them in resolution order."""
        if now is None:
            now = self._clock.now()
        if now.tzinfo is None:
            now = now.replace(tzinfo=self._default_tz)
        with self._lock:
            if self._last_tick is not None and now < self._last_tick:
                raise ClockRegressionError(
                    f"tick at {now.isoformat()} precedes previous tick "
                    f"{self._last_tick.isoformat()}"
                )
            self._last_tick = now
            due = sorted(
                (j for j in self._jobs.values()
                 if j.status is JobStatus.PENDING and j.fire_at <= now),
                key=lambda j: (j.fire_at, j.seq),
            )
            resolved: list[TimerJob] = []
            for job in due:
                late_s = (now - job.fire_at).total_seconds()
                status = JobStatus.FIRED if late_s <= self._grace_s else JobStatus.MISSED
                job = replace(job, status=status)
                self._jobs[job.id] = job
                resolved.append(job)
                if status is JobStatus.FIRED:
                    if self._on_fired is not None:
                        self._on_fired(job)
                elif self._on_missed is not None:
                    self._on_missed(job)
            return resolved

    def list_jobs(self, status: JobStatus | str | None = None) -> list[TimerJob]:
        if isinstance(status, str):
            status = JobStatus(status.lower())
        with self._lock:
            jobs = sorted(self._jobs.values(), key=lambda j: (j.fire_at, j.seq))
            if status is not None:
                jobs = [j for j in jobs if j.status is status]
            return jobs

    def get(self, job_id: str) -> TimerJob:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise UnknownJobError(f"unknown timer job: {job_id!r}")
            return job
