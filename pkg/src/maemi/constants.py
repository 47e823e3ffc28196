"""Named scalar constants for the whole instrument, with file override.

Every tunable number in the synthesis chain lives here under a single flat
namespace. The shipped defaults are calibrated stand-ins: field-measured
values for the envelope tables were never published, so these are chosen to
satisfy the timing and spectral behavior the instrument is verified against.

File format is one `name = value` per line, `#` starts a comment, blank
lines are ignored. Unknown names are an error, not a warning; a typo in a
constants file should never silently fall back to a default.
"""

from __future__ import annotations

from .errors import ConfigError

DEFAULTS: dict = {
    # ---- tymbal muscle contraction-rate factor envelopes (per call phase).
    # Output is a normalized factor: 1.0 drives contractions at pitch/4
    # (fully coherent rib timing), 0.5 is a whole octave below that.
    "c_MUSCFREQ_COHERENT_NRM": 1.0,
    "c_MAETRIG_MUSCFREQ_START_NRM": 0.3,
    "c_MAETRIG_MUSCFREQ_RISE_DUR_S": 0.9,
    "c_MAETRIG_MUSCFREQ_RISE_CURVE": -2.5,
    "c_MAERETRIG_MUSCFREQ_DIP_NRM": 0.82,
    "c_MAERETRIG_MUSCFREQ_DIP_DUR_S": 0.12,
    "c_MAERETRIG_MUSCFREQ_DIP_CURVE": 1.5,
    "c_MAERETRIG_MUSCFREQ_RISE_DUR_S": 0.5,
    "c_MAERETRIG_MUSCFREQ_RISE_CURVE": -2.0,
    "c_MITRIG_MUSCFREQ_HOLD_DUR_S": 0.2,
    "c_MITRIG_MUSCFREQ_FALL_DUR_S": 0.35,
    "c_MITRIG_MUSCFREQ_FALL_CURVE": 2.5,
    "c_MITRIG_MUSCFREQ_LOW_NRM": 0.5,
    "c_RELEASE_MUSCFREQ_FALL_DUR_S": 0.05,
    "c_RELEASE_MUSCFREQ_END_NRM": 0.0,
    # ---- effective tympanal area envelopes, normalized 0..1.
    # Drives both the resonator neck geometry and opercular attenuation.
    "c_TYMPAREA_REST_NRM": 0.5,
    "c_MAETRIG_TYMPAREA_START_NRM": 0.35,
    "c_MAETRIG_TYMPAREA_RISE_DUR_S": 0.06,
    "c_MAETRIG_TYMPAREA_RISE_CURVE": -3.0,
    "c_MAETRIG_TYMPAREA_MAX_NRM": 1.0,
    "c_MAETRIG_TYMPAREA_SETTLE_DUR_S": 1.2,
    "c_MAETRIG_TYMPAREA_SETTLE_CURVE": 2.0,
    "c_MAETRIG_TYMPAREA_SUST_NRM": 0.85,
    "c_MAERETRIG_TYMPAREA_START_NRM": 0.55,
    "c_MAERETRIG_TYMPAREA_RISE_DUR_S": 0.05,
    "c_MAERETRIG_TYMPAREA_RISE_CURVE": -3.0,
    "c_MAERETRIG_TYMPAREA_MAX_NRM": 1.0,
    "c_MAERETRIG_TYMPAREA_SAG_NRM": 0.8,
    "c_MAERETRIG_TYMPAREA_SAG_DUR_S": 0.6,
    "c_MAERETRIG_TYMPAREA_SAG_CURVE": 2.0,
    "c_MAERETRIG_TYMPAREA_SUST_NRM": 0.85,
    "c_MAERETRIG_TYMPAREA_SUST_RISE_DUR_S": 0.3,
    "c_MITRIG_TYMPAREA_HOLD_DUR_S": 0.1,
    "c_MITRIG_TYMPAREA_RISE_DUR_S": 0.15,
    "c_MITRIG_TYMPAREA_RISE_CURVE": -2.0,
    "c_MITRIG_TYMPAREA_MAX_NRM": 0.95,
    "c_MITRIG_TYMPAREA_FALL_DUR_S": 0.7,
    "c_MITRIG_TYMPAREA_FALL_CURVE": 2.5,
    "c_MITRIG_TYMPAREA_END_NRM": 0.25,
    "c_RELEASE_TYMPAREA_FALL_DUR_S": 0.05,
    "c_RELEASE_TYMPAREA_END_NRM": 0.2,
    # ---- abdominal cavity volume envelopes, normalized 0..1.
    "c_ABDVOL_REST_NRM": 0.6,
    "c_MAETRIG_ABDVOL_RISE_DUR_S": 0.5,
    "c_MAETRIG_ABDVOL_RISE_CURVE": -2.0,
    "c_MAETRIG_ABDVOL_MAX_NRM": 1.0,
    "c_MAERETRIG_ABDVOL_DIP_NRM": 0.9,
    "c_MAERETRIG_ABDVOL_DIP_DUR_S": 0.1,
    "c_MAERETRIG_ABDVOL_RISE_DUR_S": 0.4,
    "c_MITRIG_ABDVOL_FALL_DUR_S": 0.8,
    "c_MITRIG_ABDVOL_FALL_CURVE": 2.0,
    "c_MITRIG_ABDVOL_END_NRM": 0.75,
    "c_RELEASE_ABDVOL_FALL_DUR_S": 0.08,
    "c_RELEASE_ABDVOL_END_NRM": 0.6,
    # ---- contraction-rate detune and buckling pulse gains.
    # Semi-normal jitter: sigma at a third of the hard cap puts the redraw
    # bound at 3 sigma, so truncation stays rare (~0.3% of draws).
    "c_DETUNE_LIMIT_CENTS": 10.0,
    "c_DETUNE_SIGMA_CENTS": 10.0 / 3.0,
    "c_PULSE_GAIN_INRIB1": 1.0,
    "c_PULSE_GAIN_INRIB2": 1.0,
    "c_PULSE_GAIN_INRIB3": 1.0,
    "c_PULSE_GAIN_OUTALL": 1.3,
    # ---- tymbal plate filter bank. Centers are 3 * pitch * ratio;
    # running Q is half the unloaded value.
    # The closing-buckle band sits at 17/12 of the in-rib center: 3 * 17/12
    # = 17/4 of the pitch, which is itself a line of the pulse-train comb at
    # every note, so its long ring reinforces the top sung harmonic instead
    # of smearing between lines. Its high Q also keeps the skirt out of the
    # 3 kHz octave at half loudness, which is what lets the clip's
    # intermodulation read as a brightness step at full loudness.
    "c_PLATE_RATIO_INRIB1": 1.00,
    "c_PLATE_RATIO_INRIB2": 0.97,
    "c_PLATE_RATIO_INRIB3": 1.03,
    "c_PLATE_RATIO_OUTALL": 17.0 / 12.0,
    "c_PLATE_Q_UNLOADED_INRIB1": 16.0,
    "c_PLATE_Q_UNLOADED_INRIB2": 14.0,
    "c_PLATE_Q_UNLOADED_INRIB3": 12.0,
    "c_PLATE_Q_UNLOADED_OUTALL": 96.0,
    "c_PLATE_DRY_WEIGHT": 0.12,
    "c_PLATE_WET_WEIGHT_INRIB1": 1.0,
    "c_PLATE_WET_WEIGHT_INRIB2": 1.0,
    "c_PLATE_WET_WEIGHT_INRIB3": 1.0,
    "c_PLATE_WET_WEIGHT_OUTALL": 1.6,
    "c_CLIP_ENABLE": 1.0,
    "c_CLIP_DRIVE_MAX": 3.0,
    # ---- abdominal resonator geometry and response.
    "c_SPEED_OF_SOUND_MPS": 343.0,
    "c_TYMPANUM_AREA_MIN_M2": 4.0e-6,
    "c_TYMPANUM_AREA_MAX_M2": 4.0e-5,
    "c_ABDOMEN_VOLUME_MIN_M3": 2.0e-6,
    "c_ABDOMEN_VOLUME_MAX_M3": 2.7e-6,
    # 0.70 keeps the upper end of the sung comb clear of the abdomen skirt;
    # narrower settings start to shave the 2.8 kHz harmonics below audibility
    "c_ABD_BANDWIDTH_FACTOR": 0.70,
    "c_OPERCULA_FLOOR_DB": -20.0,
    # ---- voice-level output shaping.
    "c_OUTPUT_GAIN": 0.9,
}


class Constants:
    """Immutable view over the constants table.

    Build with `Constants()` for defaults, `Constants.from_file(path)` or
    `override({...})` for variants. Lookup by item or attribute.
    """

    __slots__ = ("_values",)

    def __init__(self, values: dict | None = None):
        table = dict(DEFAULTS)
        if values:
            unknown = sorted(set(values) - set(DEFAULTS))
            if unknown:
                raise ConfigError(f"unknown constants: {', '.join(unknown)}")
            for key, val in values.items():
                table[key] = float(val)
        self._values = table

    def __getitem__(self, name: str) -> float:
        try:
            return self._values[name]
        except KeyError:
            raise ConfigError(f"unknown constant: {name}") from None

    def __getattr__(self, name: str) -> float:
        if name.startswith("c_"):
            return self[name]
        raise AttributeError(name)

    def __eq__(self, other):
        return isinstance(other, Constants) and self._values == other._values

    def as_dict(self) -> dict:
        return dict(self._values)

    def override(self, values: dict) -> "Constants":
        merged = dict(self._values)
        unknown = sorted(set(values) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown constants: {', '.join(unknown)}")
        merged.update({k: float(v) for k, v in values.items()})
        return Constants(merged)

    def dumps(self) -> str:
        lines = ["# instrument constants, one name = value per line"]
        lines += [f"{name} = {value!r}" for name, value in self._values.items()]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Constants":
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'name = value'")
            name, _, rhs = line.partition("=")
            name = name.strip()
            rhs = rhs.strip()
            if name not in DEFAULTS:
                raise ConfigError(f"line {lineno}: unknown constant: {name}")
            try:
                values[name] = float(rhs)
            except ValueError:
                raise ConfigError(
                    f"line {lineno}: bad value for {name}: {rhs!r}"
                ) from None
        return cls(values)

    @classmethod
    def from_file(cls, path) -> "Constants":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.loads(fh.read())
