import numpy as np
import pytest

from hand25d import serialize
from hand25d.camera import CameraIntrinsics, project
from hand25d.errors import ConfigError, DataFormatError
from hand25d.heatmap import HeatmapGrid, HeatmapStack, encode_direct
from hand25d.metrics import evaluate
from hand25d.skeleton import BoneStats, canonical_skeleton
from hand25d.synth import SynthConfig, gen_pose
from hand25d.types import Pose25D


def synth_records(count, seed=0, **kwargs):
    cfg = SynthConfig(seed=seed, **kwargs)
    return [gen_pose(cfg, i)[2] for i in range(count)]


class TestPoseRecordJsonl:
    def test_write_read_write_byte_identical(self, tmp_path):
        records = synth_records(50)
        first = tmp_path / "a.jsonl"
        second = tmp_path / "b.jsonl"
        serialize.write_pose_records(first, records)
        serialize.write_pose_records(second, serialize.read_pose_records(first))
        assert first.read_bytes() == second.read_bytes()

    def test_partial_validity_round_trip(self, tmp_path):
        rec = synth_records(1)[0]
        rec.valid[3] = False
        rec.valid[17] = False
        path = tmp_path / "p.jsonl"
        serialize.write_pose_records(path, [rec])
        back = serialize.read_pose_records(path)[0]
        np.testing.assert_array_equal(back.valid, rec.valid)
        np.testing.assert_array_equal(back.px[rec.valid], rec.px[rec.valid])
        # invalid keypoints come back as placeholders
        assert back.px[3, 0] == 0.0

    def test_nan_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        line = (
            '{"schema_version":1,"side":"right","keypoints":['
            + ",".join(
                f'{{"id":{i},"name":"k{i}","valid":true,"px":[NaN,0.0]}}' for i in range(21)
            )
            + "]}"
        )
        path.write_text(line + "\n")
        with pytest.raises(DataFormatError):
            serialize.read_pose_records(path)

    def test_duplicate_ids_rejected(self, tmp_path):
        path = tmp_path / "dup.jsonl"
        kps = ",".join(f'{{"id":0,"name":"x","valid":false}}' for _ in range(21))
        path.write_text(f'{{"schema_version":1,"side":"right","keypoints":[{kps}]}}\n')
        with pytest.raises(DataFormatError):
            serialize.read_pose_records(path)

    def test_valid_without_coordinates_rejected(self, tmp_path):
        path = tmp_path / "incons.jsonl"
        kps = ['{"id":0,"name":"palm","valid":true,"px":[1.0,2.0]}']
        kps += [f'{{"id":{i},"name":"k","valid":true}}' for i in range(1, 21)]
        path.write_text(
            '{"schema_version":1,"side":"right","keypoints":[' + ",".join(kps) + "]}\n"
        )
        with pytest.raises(DataFormatError):
            serialize.read_pose_records(path)

    def test_bad_schema_version(self, tmp_path):
        path = tmp_path / "v9.jsonl"
        path.write_text('{"schema_version":9,"side":"right","keypoints":[]}\n')
        with pytest.raises(DataFormatError):
            serialize.read_pose_records(path)


class TestSidecars:
    def test_camera_round_trip(self, tmp_path):
        cam = CameraIntrinsics(fx=151.25, fy=149.75, cx=63.5, cy=64.5, skew=0.125)
        path = tmp_path / "cam.json"
        serialize.write_camera_json(path, cam)
        assert serialize.read_camera_json(path) == cam
        serialize.write_camera_json(tmp_path / "cam2.json", serialize.read_camera_json(path))
        assert path.read_bytes() == (tmp_path / "cam2.json").read_bytes()

    def test_camera_missing_field(self, tmp_path):
        path = tmp_path / "cam.json"
        path.write_text('{"fx": 100.0}')
        with pytest.raises(DataFormatError):
            serialize.read_camera_json(path)

    def test_bone_stats_round_trip(self, tmp_path):
        stats = BoneStats(mean_length=np.linspace(10.0, 60.0, 20))
        path = tmp_path / "stats.json"
        serialize.write_bone_stats_json(path, stats)
        np.testing.assert_array_equal(
            serialize.read_bone_stats_json(path).mean_length, stats.mean_length
        )

    def test_bone_stats_negative_rejected(self, tmp_path):
        path = tmp_path / "stats.json"
        path.write_text('{"schema_version":1,"mean_length_mm":[-1.0]}')
        with pytest.raises(DataFormatError):
            serialize.read_bone_stats_json(path)

    def test_skeleton_round_trip(self, tmp_path):
        skel = canonical_skeleton()
        path = tmp_path / "skel.json"
        serialize.write_skeleton_json(path, skel)
        assert serialize.read_skeleton_json(path) == skel

    def test_beta_round_trip(self, tmp_path):
        beta = np.linspace(0.5, 2.0, 21)
        path = tmp_path / "beta.json"
        serialize.write_beta_json(path, beta)
        np.testing.assert_array_equal(serialize.read_beta_json(path), beta)

    def test_beta_nonpositive_rejected(self, tmp_path):
        path = tmp_path / "beta.json"
        path.write_text("[1.0, 0.0]")
        with pytest.raises(DataFormatError):
            serialize.read_beta_json(path)


class TestH25D:
    def stack(self):
        rng = np.random.default_rng(0)
        pose = Pose25D(xy=rng.uniform(2, 29, (21, 2)), zr=rng.normal(size=21))
        return encode_direct(pose, HeatmapGrid(width=32, height=32))

    def test_write_read_write_byte_identical(self, tmp_path):
        first = tmp_path / "a.h25d"
        second = tmp_path / "b.h25d"
        serialize.write_h25d(first, self.stack())
        serialize.write_h25d(second, serialize.read_h25d(first))
        assert first.read_bytes() == second.read_bytes()

    def test_header_layout(self, tmp_path):
        path = tmp_path / "m.h25d"
        serialize.write_h25d(path, self.stack())
        raw = path.read_bytes()
        assert raw[:4] == b"H25D"
        assert int.from_bytes(raw[4:8], "little") == 1
        assert int.from_bytes(raw[8:12], "little") == 21
        assert int.from_bytes(raw[12:16], "little") == 32
        assert int.from_bytes(raw[16:20], "little") == 32
        assert raw[20] == 0  # direct
        assert len(raw) == 24 + 2 * 21 * 32 * 32 * 4

    def test_latent_kind_byte(self, tmp_path):
        stack = HeatmapStack(
            kind="latent", likelihood=np.zeros((2, 4, 4)), depth=np.zeros((2, 4, 4))
        )
        path = tmp_path / "l.h25d"
        serialize.write_h25d(path, stack)
        assert path.read_bytes()[20] == 1
        assert serialize.read_h25d(path).kind == "latent"

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "x.h25d"
        serialize.write_h25d(path, self.stack())
        raw = bytearray(path.read_bytes())
        raw[:4] = b"NOPE"
        path.write_bytes(bytes(raw))
        with pytest.raises(DataFormatError):
            serialize.read_h25d(path)

    def test_truncated(self, tmp_path):
        path = tmp_path / "t.h25d"
        serialize.write_h25d(path, self.stack())
        path.write_bytes(path.read_bytes()[:100])
        with pytest.raises(DataFormatError):
            serialize.read_h25d(path)


class TestReportAndCurve:
    def report(self):
        rng = np.random.default_rng(1)
        pts = [rng.normal(size=(21, 3)) for _ in range(4)]
        noisy = [p + rng.normal(scale=10.0, size=p.shape) for p in pts]
        return evaluate(noisy, pts, [None] * 4, "absolute_with_scale", "3d")

    def test_report_round_trip(self, tmp_path):
        report = self.report()
        first = tmp_path / "r.json"
        second = tmp_path / "r2.json"
        serialize.write_report_json(first, report)
        serialize.write_report_json(second, serialize.read_report_json(first))
        assert first.read_bytes() == second.read_bytes()

    def test_curve_csv(self, tmp_path):
        path = tmp_path / "c.csv"
        serialize.write_curve_csv(path, [(20.0, 0.5), (21.0, 0.75)])
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "threshold,fraction"
        assert lines[1] == "20.0,0.5"
        assert lines[2] == "21.0,0.75"


class TestFlip:
    def test_right_record_untouched(self):
        rec = synth_records(1)[0]
        assert serialize.flip_record_to_right(rec) is rec

    def test_left_record_mirrors_consistently(self):
        rec = synth_records(1, seed=3)[0]
        rec.side = "left"
        flipped = serialize.flip_record_to_right(rec)
        assert flipped.side == "right"
        np.testing.assert_allclose(flipped.xyz_mm[:, 0], -rec.xyz_mm[:, 0], rtol=1e-12)
        np.testing.assert_array_equal(flipped.xyz_mm[:, 1:], rec.xyz_mm[:, 1:])
        # pixel view stays consistent with the mirrored 3D pose
        reproj, _ = project(flipped.pose3d(), flipped.camera)
        np.testing.assert_allclose(flipped.px, reproj.xy, atol=1e-9)
        np.testing.assert_allclose(flipped.px[:, 0], 2 * rec.camera.cx - rec.px[:, 0], atol=1e-9)

    def test_pixel_only_flip(self):
        rec = synth_records(1, seed=4)[0]
        rec = serialize.PoseRecord(
            valid=rec.valid, px=rec.px, side="left", camera=rec.camera
        )
        flipped = serialize.flip_record_to_right(rec)
        np.testing.assert_allclose(flipped.px[:, 0], 2 * rec.camera.cx - rec.px[:, 0], atol=1e-12)

    def test_left_without_camera_rejected(self):
        rec = synth_records(1, seed=5)[0]
        bare = serialize.PoseRecord(valid=rec.valid, px=rec.px, side="left")
        with pytest.raises(ConfigError):
            serialize.flip_record_to_right(bare)
