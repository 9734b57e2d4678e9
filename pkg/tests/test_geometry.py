import numpy as np
import pytest

from aerisim.geometry import (Side, SphericalDirection, SurfaceKind,
                              SurfaceOrientation, build_scenario,
                              classify_users, incidence_geometry,
                              spherical_angles, unit_direction)


class TestSphericalAngles:
    def test_vertical_line_uses_zero_azimuth(self):
        d = spherical_angles((0, 0, 0), (0, 0, 10))
        assert d.azimuth == 0.0
        assert d.elevation == pytest.approx(np.pi / 2)

    def test_45_degree_elevation(self):
        d = spherical_angles((0, 0, 0), (10, 0, 10))
        assert d.azimuth == pytest.approx(0.0)
        assert d.elevation == pytest.approx(np.pi / 4)

    def test_pure_y_offset(self):
        d = spherical_angles((10, 10, 0), (10, 20, 0))
        assert d.azimuth == pytest.approx(np.pi / 2)
        assert d.elevation == pytest.approx(0.0)

    def test_coincident_points_rejected(self):
        with pytest.raises(ValueError, match="coincident"):
            spherical_angles((1.0, 2.0, 3.0), (1.0, 2.0, 3.0))

    def test_ranges(self, rng):
        for _ in range(200):
            a = rng.uniform(-50, 50, 3)
            b = rng.uniform(-50, 50, 3)
            if np.allclose(a, b):
                continue
            d = spherical_angles(a, b)
            assert -np.pi < d.azimuth <= np.pi + 1e-15
            assert -np.pi / 2 <= d.elevation <= np.pi / 2


class TestUnitDirection:
    @pytest.mark.parametrize("az,el,expected", [
        (0.0, 0.0, [1, 0, 0]),
        (np.pi / 2, 0.0, [0, 1, 0]),
        (0.0, np.pi / 2, [0, 0, 1]),
    ])
    def test_axis_cases(self, az, el, expected):
        np.testing.assert_allclose(
            unit_direction(SphericalDirection(az, el)), expected, atol=1e-15)

    def test_unit_norm(self, rng):
        for _ in range(300):
            d = SphericalDirection(rng.uniform(-np.pi, np.pi),
                                   rng.uniform(-np.pi / 2, np.pi / 2))
            assert abs(np.linalg.norm(unit_direction(d)) - 1.0) < 1e-12

    def test_round_trip_with_angles(self, rng):
        for _ in range(100):
            a = rng.uniform(-50, 50, 3)
            b = rng.uniform(-50, 50, 3)
            d = spherical_angles(a, b)
            v = unit_direction(d)
            expected = (b - a) / np.linalg.norm(b - a)
            np.testing.assert_allclose(v, expected, atol=1e-12)


class TestIncidence:
    def test_ris_surface_above_bs(self):
        e_bs = unit_direction(SphericalDirection(0.0, np.pi / 2))
        inc = incidence_geometry(
            SurfaceOrientation(SurfaceKind.HORIZONTAL_RIS), e_bs, e_bs[None, :])
        assert inc.cos_bs == pytest.approx(1.0)

    def test_star_user_behind_positive_x(self):
        # direction user -> surface along -x puts the user on the +x side,
        # facing the eta=0 normal: reflection half-space
        e = unit_direction(SphericalDirection(np.pi, 0.0))
        inc = incidence_geometry(
            SurfaceOrientation(SurfaceKind.VERTICAL_STAR, 0.0), e, e[None, :])
        assert inc.cos_users[0] == pytest.approx(1.0)
        assert inc.sides[0] == Side.REFLECTION

    def test_star_user_on_negative_side(self):
        e = unit_direction(SphericalDirection(0.0, 0.0))
        inc = incidence_geometry(
            SurfaceOrientation(SurfaceKind.VERTICAL_STAR, 0.0), e, e[None, :])
        assert inc.cos_users[0] == pytest.approx(-1.0)
        assert inc.sides[0] == Side.TRANSMISSION

    def test_ris_mode_always_reflection(self, rng):
        dirs = np.stack([unit_direction(SphericalDirection(
            rng.uniform(-np.pi, np.pi), rng.uniform(-np.pi / 2, np.pi / 2)))
            for _ in range(10)])
        inc = incidence_geometry(
            SurfaceOrientation(SurfaceKind.HORIZONTAL_RIS), dirs[0], dirs)
        assert np.all(inc.sides == Side.REFLECTION)

    def test_cosines_bounded(self, rng):
        for kind in SurfaceKind:
            for _ in range(50):
                eta = rng.uniform(-np.pi, np.pi)
                dirs = np.stack([unit_direction(SphericalDirection(
                    rng.uniform(-np.pi, np.pi), rng.uniform(-np.pi / 2, np.pi / 2)))
                    for _ in range(5)])
                inc = incidence_geometry(SurfaceOrientation(kind, eta),
                                         dirs[0], dirs[1:])
                assert -1.0 <= inc.cos_bs <= 1.0
                assert np.all(inc.cos_users >= -1.0)
                assert np.all(inc.cos_users <= 1.0)

    def test_ris_everything_below_gives_nonnegative_cosines(self, rng):
        for _ in range(30):
            users = np.column_stack([rng.uniform(0, 100, 4),
                                     rng.uniform(0, 100, 4), np.zeros(4)])
            scen = build_scenario((0, 0, 0), rng.uniform(5, 95, 2).tolist() + [30.0],
                                  users, SurfaceOrientation(SurfaceKind.HORIZONTAL_RIS))
            assert scen.incidence.cos_bs >= 0.0
            assert np.all(scen.incidence.cos_users >= 0.0)


class TestClassification:
    def test_sign_rule(self):
        from aerisim.geometry import IncidenceGeometry
        geom = IncidenceGeometry(cos_bs=0.5,
                                 cos_users=np.array([0.5, -0.3]),
                                 sides=np.array([0, 1], dtype=np.int8))
        refl, trans = classify_users(geom)
        assert refl.tolist() == [0]
        assert trans.tolist() == [1]

    def test_boundary_goes_to_reflection(self):
        e_zero = np.array([0.0, 1.0, 0.0])  # orthogonal to the eta=0 normal
        inc = incidence_geometry(
            SurfaceOrientation(SurfaceKind.VERTICAL_STAR, 0.0),
            e_zero, np.stack([e_zero, e_zero]))
        refl, trans = classify_users(inc)
        assert refl.tolist() == [0, 1]
        assert trans.size == 0

    def test_half_turn_swaps_sides(self, rng):
        for _ in range(50):
            eta = rng.uniform(-np.pi, np.pi)
            dirs = np.stack([unit_direction(SphericalDirection(
                rng.uniform(-np.pi, np.pi), rng.uniform(-np.pi / 2, np.pi / 2)))
                for _ in range(6)])
            inc = incidence_geometry(
                SurfaceOrientation(SurfaceKind.VERTICAL_STAR, eta), dirs[0], dirs)
            flipped = incidence_geometry(
                SurfaceOrientation(SurfaceKind.VERTICAL_STAR, eta + np.pi),
                dirs[0], dirs)
            refl, trans = classify_users(inc)
            refl_f, trans_f = classify_users(flipped)
            # boundary cosines (exactly zero) stay on the reflection side
            on_boundary = np.abs(inc.cos_users) < 1e-15
            if not np.any(on_boundary):
                assert refl.tolist() == trans_f.tolist()
                assert trans.tolist() == refl_f.tolist()


class TestScenario:
    def test_translation_invariance(self, rng):
        users = np.column_stack([rng.uniform(0, 100, 4),
                                 rng.uniform(0, 100, 4), np.zeros(4)])
        offset = rng.uniform(-30, 30, 3)
        orient = SurfaceOrientation(SurfaceKind.VERTICAL_STAR, 0.7)
        a = build_scenario((0, 0, 0), (50, 50, 40), users, orient)
        b = build_scenario(offset, np.array([50, 50, 40]) + offset,
                           users + offset, orient)
        assert a.incidence.cos_bs == pytest.approx(b.incidence.cos_bs, abs=1e-12)
        np.testing.assert_allclose(a.incidence.cos_users, b.incidence.cos_users,
                                   atol=1e-12)
        assert np.array_equal(a.incidence.sides, b.incidence.sides)

    def test_user_shape_validated(self):
        with pytest.raises(ValueError, match=r"\(K, 3\)"):
            build_scenario((0, 0, 0), (1, 1, 1), np.zeros((3, 2)),
                           SurfaceOrientation(SurfaceKind.HORIZONTAL_RIS))
