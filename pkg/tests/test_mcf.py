"""Curvature-flow reference tests against the closed-form circle law."""

import math

import numpy as np
import pytest

from phaselab import mcf


class TestCircleLaw:
    def test_initial_radius(self):
        law = mcf.CircleLaw((0.5, 0.5), 0.25, 1.0)
        assert law.radius(0.0) == 0.25

    def test_frozen_value(self):
        # R(0.01) = sqrt(0.0625 - 0.02), integrated R' = -lambda0/R oracle
        law = mcf.CircleLaw((0.5, 0.5), 0.25, 1.0)
        assert law.radius(0.01) == pytest.approx(0.20615528128088303, abs=1e-15)

    def test_extinction(self):
        law = mcf.CircleLaw((0.0, 0.0), 0.25, 1.0)
        assert law.extinction_time == pytest.approx(0.03125)
        with pytest.raises(mcf.InterfaceExtinctError):
            law.radius(0.03125)
        t = 0.03125 * (1 - 1e-12)
        assert law.radius(t) < 1e-5

    def test_lambda0_rescales_extinction(self):
        law = mcf.CircleLaw((0.0, 0.0), 0.25, 2.0)
        assert law.extinction_time == pytest.approx(0.25 ** 2 / 4.0)


class TestEvolveFront:
    def test_circle_tracks_law_within_half_percent(self):
        law = mcf.CircleLaw((0.5, 0.5), 0.25, 1.0)
        start = law.polyline(0.0, n=256)
        t_end = 0.9 * law.extinction_time
        traj = mcf.evolve_front(start, 1.0, t_end, record_every=20)
        checked = 0
        for k, t in enumerate(traj.times):
            r_sim = traj.mean_radius(k)
            if t >= law.extinction_time:
                break
            r_law = law.radius(float(t))
            if r_law < 5.0 * traj.spacing:
                break
            assert abs(r_sim - r_law) / r_law <= 5e-3
            checked += 1
        assert checked >= 10

    def test_area_decay_rate(self):
        law = mcf.CircleLaw((0.5, 0.5), 0.25, 1.0)
        traj = mcf.evolve_front(law.polyline(0.0, n=256), 1.0,
                                0.6 * law.extinction_time)
        slope = np.polyfit(traj.area_times, traj.areas, 1)[0]
        assert slope == pytest.approx(-2.0 * math.pi, rel=0.01)

    def test_area_decay_rate_scales_with_lambda0(self):
        lam = 2.5
        law = mcf.CircleLaw((0.5, 0.5), 0.25, lam)
        traj = mcf.evolve_front(law.polyline(0.0, n=256), lam,
                                0.5 * law.extinction_time)
        slope = np.polyfit(traj.area_times, traj.areas, 1)[0]
        assert slope == pytest.approx(-2.0 * math.pi * lam, rel=0.01)

    def test_zero_lambda_stationary(self):
        start = mcf.circle_polyline((0.5, 0.5), 0.25, n=256)
        traj = mcf.evolve_front(start, 0.0, 1e-3)
        assert mcf.front_distance(traj.fronts[-1], start) < 1e-6

    def test_ellipse_rounds_out(self):
        th = np.linspace(0.0, 2.0 * np.pi, 384, endpoint=False)
        ellipse = np.column_stack([0.5 + 0.3 * np.cos(th),
                                      0.5 + 0.15 * np.sin(th)])
        traj = mcf.evolve_front(ellipse, 1.0, 0.008, record_every=25)
        ratios = [mcf.perimeter(f) ** 2 / (4.0 * math.pi * mcf.enclosed_area(f))
                  for f in traj.fronts]
        assert all(r >= 1.0 - 1e-9 for r in ratios)
        assert all(b <= a + 1e-9 for a, b in zip(ratios, ratios[1:]))
        assert ratios[-1] < ratios[0] - 0.01

    def test_first_order_convergence_in_dt(self):
        law = mcf.CircleLaw((0.5, 0.5), 0.25, 1.0)
        start = law.polyline(0.0, n=512)
        t_star = 0.01
        spacing = mcf.perimeter(start) / 512.0
        errs = []
        for dt in (0.2 * spacing ** 2, 0.1 * spacing ** 2):
            traj = mcf.evolve_front(start, 1.0, t_star, dt=dt,
                                    record_every=10 ** 9)
            errs.append(abs(traj.mean_radius(-1) - law.radius(t_star)))
        rate = math.log2(errs[0] / errs[1])
        assert rate >= 0.9

    def test_dt_bound_enforced(self):
        start = mcf.circle_polyline((0.5, 0.5), 0.25, n=128)
        spacing = mcf.perimeter(start) / 256.0
        with pytest.raises(ValueError):
            mcf.evolve_front(start, 1.0, 1e-3, dt=spacing ** 2, spacing=spacing)

    def test_self_intersecting_start_rejected(self):
        # figure-eight, phase-shifted so the crossing is segment-interior
        th = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False) + 0.03
        pts = np.column_stack([np.sin(2 * th) * 0.2 + 0.5,
                               np.sin(th) * 0.2 + 0.5])
        with pytest.raises(mcf.SelfIntersectionError):
            mcf.evolve_front(pts, 1.0, 1e-3)


def test_trajectory_csv(tmp_path):
    law = mcf.CircleLaw((0.5, 0.5), 0.25, 1.0)
    traj = mcf.evolve_front(law.polyline(0.0, n=128), 1.0,
                            0.1 * law.extinction_time, record_every=50)
    path = tmp_path / "traj.csv"
    mcf.write_trajectory_csv(traj, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,x,y"
    assert len(lines) == 1 + sum(f.shape[0] for f in traj.fronts)
    first_t = float(lines[1].split(",")[0])
    assert first_t == 0.0


class TestFrontDistance:
    def test_identical_fronts(self):
        a = mcf.circle_polyline((0.5, 0.5), 0.2, n=128)
        assert mcf.front_distance(a, a.copy()) <= 1e-12

    def test_concentric_circles(self):
        a = mcf.circle_polyline((0.5, 0.5), 0.20, n=2048)
        b = mcf.circle_polyline((0.5, 0.5), 0.23, n=2048)
        assert mcf.front_distance(a, b) == pytest.approx(0.03, abs=1e-4)

    def test_polygon_sagitta_bound(self):
        r = 0.25
        circle = mcf.circle_polyline((0.0, 0.0), r, n=2048)
        polygon = mcf.circle_polyline((0.0, 0.0), r, n=500)
        sagitta = r * (1.0 - math.cos(math.pi / 500.0))
        assert mcf.front_distance(circle, polygon) <= sagitta * 1.05
