import numpy as np
import pytest

from roomtrack import dataset, multilat, simulator, stream
from roomtrack.geometry import Point, point_room
from roomtrack.simulator import RadioModel

QUIET = RadioModel(shadowing_sigma=0.0)


class TestReadings:
    def test_reference_levels(self):
        draw = np.random.default_rng(0)
        assert simulator.synth_rssi(Point(1, 0), Point(0, 0), QUIET, draw) == -61
        assert simulator.synth_rssi(Point(2, 0), Point(0, 0), QUIET, draw) == -70

    def test_floor(self):
        draw = np.random.default_rng(0)
        assert simulator.synth_rssi(Point(100, 0), Point(0, 0), QUIET, draw) is None

    def test_close_range_clamped(self):
        v = simulator.synth_rssi(Point(0, 0), Point(0, 0), QUIET, np.random.default_rng(0))
        assert v <= dataset.RSSI_MAX

    def test_noise_std(self):
        m = RadioModel(sensitivity_floor=-200)
        draw = np.random.default_rng(3)
        vals = np.array([simulator.synth_rssi(Point(3, 0), Point(0, 0), m, draw) for _ in range(10_000)])
        assert abs(vals.std() - 4.0) <= 0.4
        assert abs(vals.mean() - simulator.mean_rssi(3.0, m.path_loss)) < 0.2

    def test_round_trip_distance(self):
        p = multilat.PathLossParams()
        for d in (1.5, 3.0, 7.0, 12.0):
            v = float(np.rint(simulator.mean_rssi(d, p)))
            assert abs(multilat.rssi_to_distance(v, p) - d) / d < 0.06

    def test_wall_loss(self, office):
        pts = np.array([[1.0, 1.0]])
        far = np.array([[p.x, p.y] for p in office.beacons.values()])
        walls = simulator.wall_crossings(office, pts, far)
        assert walls.shape == (1, len(far)) and walls.min() >= 0 and walls.max() >= 1

    @pytest.mark.parametrize("kw", [{"shadowing_sigma": -1}, {"sensitivity_floor": 0}, {"wall_loss_db": -1}])
    def test_invalid_model(self, kw):
        with pytest.raises(ValueError):
            RadioModel(**kw)


class TestSurvey:
    def test_balance_and_shape(self, office):
        raw = simulator.collect_survey(office, 1000, RadioModel(seed=2))
        assert raw.values.shape == (11_000, len(office.beacons))
        labels, counts = np.unique(raw.rooms, return_counts=True)
        assert list(labels) == sorted(office.room_labels) and set(counts) == {1000}
        obs = raw.values[~np.isnan(raw.values)]
        assert obs.min() >= -95 and np.all(obs == np.rint(obs))

    def test_deterministic(self, apartment):
        a = simulator.collect_survey(apartment, 50, RadioModel(seed=7))
        b = simulator.collect_survey(apartment, 50, RadioModel(seed=7))
        c = simulator.collect_survey(apartment, 50, RadioModel(seed=8))
        assert np.array_equal(a.values, b.values, equal_nan=True)
        assert not np.array_equal(a.values, c.values, equal_nan=True)

    def test_invalid(self, apartment):
        with pytest.raises(ValueError):
            simulator.collect_survey(apartment, 0, RadioModel())


class TestWalk:
    def test_length_and_inside(self, office):
        t = simulator.generate_walk(office, 60, seed=1)
        assert len(t) == 60
        assert np.all(np.diff(t.timestamps) == 1000)
        assert all(point_room(Point(*p), office) is not None for p in t.positions)
        step = np.hypot(*np.diff(t.positions, axis=0).T)
        assert step.max() <= 1.0 + 1e-9

    def test_seeds(self, office):
        a = simulator.generate_walk(office, 30, seed=1)
        b = simulator.generate_walk(office, 30, seed=1)
        c = simulator.generate_walk(office, 30, seed=2)
        assert np.array_equal(a.positions, b.positions)
        assert not np.array_equal(a.positions, c.positions)

    def test_position_at(self, office):
        t = simulator.generate_walk(office, 10, seed=0)
        p = t.position_at(int(t.timestamps[3]) + 500)
        assert (p.x, p.y) == tuple(t.positions[3])

    def test_invalid(self, office):
        with pytest.raises(ValueError):
            simulator.generate_walk(office, 0)


@pytest.fixture(scope="module")
def setup(office):
    traj = simulator.generate_walk(office, 600, seed=3)
    assets = simulator.place_assets_on_walk(office, traj, 3, scan_interval=10)
    inv = simulator.build_inventory(office, list(assets.assets))
    return traj, assets, inv


class TestEvents:
    def test_assets_in_distinct_rooms(self, office, setup):
        _, assets, _ = setup
        rooms = [room for _, room in assets.assets.values()]
        assert len(set(rooms)) == 3
        assert sorted(assets.assets) == ["asset-01", "asset-02", "asset-03"]

    def test_too_many_assets(self, office):
        traj = simulator.generate_walk(office, 20, seed=3)
        with pytest.raises(ValueError):
            simulator.place_assets_on_walk(office, traj, 11)

    def test_events_parse(self, office, setup, tmp_path):
        traj, assets, inv = setup
        ev = simulator.emit_scan_events(traj, office, assets, inv, RadioModel(seed=3), scan_interval=60)
        assert {e.timestamp for e in ev} == set(range(int(traj.timestamps[0]), int(traj.timestamps[-1]) + 1, 60_000))
        assert all(e.mac_address in inv.beacons for e in ev)
        p = tmp_path / "events.jsonl"
        stream.write_events(ev, p)
        back = [stream.parse_event(line) for line in p.read_text().splitlines()]
        assert back == ev

    def test_scan_interval(self, office, setup):
        traj, assets, inv = setup
        with pytest.raises(ValueError):
            simulator.emit_scan_events(traj, office, assets, inv, RadioModel(), scan_interval=0.5)

    def test_inventory_macs(self, office, setup):
        _, _, inv = setup
        kinds = [k for k, _, _ in inv.beacons.values()]
        assert kinds.count("fixed") == len(office.beacons) and kinds.count("mobile") == 3
        assert "C0:00:00:00:00:01" in inv.beacons
