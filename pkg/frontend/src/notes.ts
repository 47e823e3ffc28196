/** The playable octave: thirteen equal-temperament keys from E4 to E5. */

export const NOTE_NAMES = [
  "E4", "F4", "F#4", "G4", "G#4", "A4", "A#4", "B4",
  "C5", "C#5", "D5", "D#5", "E5",
] as const;

export type NoteName = (typeof NOTE_NAMES)[number];

// A4 = 440; quoted to 0.01 Hz, matching the engine's published table
export const NOTE_HZ: Record<NoteName, number> = Object.fromEntries(
  NOTE_NAMES.map((name, i) => [
    name,
    Math.round(440 * Math.pow(2, (i - 5) / 12) * 100) / 100,
  ]),
) as Record<NoteName, number>;

export function isBlackKey(name: NoteName): boolean {
  return name.includes("#");
}

/** Computer-keyboard row: white keys on the home row, sharps above,
 * the usual tracker layout. */
export const KEY_TO_NOTE: Record<string, NoteName> = {
  a: "E4",
  s: "F4",
  e: "F#4",
  d: "G4",
  r: "G#4",
  f: "A4",
  t: "A#4",
  g: "B4",
  h: "C5",
  u: "C#5",
  j: "D5",
  i: "D#5",
  k: "E5",
};
