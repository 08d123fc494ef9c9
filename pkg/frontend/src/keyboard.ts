/** Keyboard shortcuts.
 *
 * Digit keys toggle the symptom labels: "1" through "9" map to labels
 * 1–9 and "0" maps to label 10. Other labels are mouse-only; Enter
 * submits and "s" skips (handled by the page wiring, not here).
 */

export function labelForKey(key: string): number | null {
  if (key >= "1" && key <= "9") {
    return key.charCodeAt(0) - "0".charCodeAt(0);
  }
  if (key === "0") {
    return 10;
  }
  return null;
}
