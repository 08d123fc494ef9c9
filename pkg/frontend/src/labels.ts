/** Label taxonomy and the client-side selection rules.
 *
 * The selection can never violate the label-set invariants the service
 * enforces: "No evidence" and "Gibberish" stand alone, everything else
 * may combine. The service re-checks on submit; this module exists so
 * the UI cannot even build an invalid request.
 */

export const SYMPTOM_IDS = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10] as const;
export const ED = 11;
export const NOED = 12;
export const GIBBERISH = 13;

/** Labels that exclude every other label. */
export const SINGLETON_IDS: readonly number[] = [NOED, GIBBERISH];

export const ALL_IDS: readonly number[] = [...SYMPTOM_IDS, ED, NOED, GIBBERISH];

export function isSingleton(id: number): boolean {
  return SINGLETON_IDS.includes(id);
}

/**
 * Toggle one label in a selection, keeping the selection valid.
 *
 * - toggling a selected label removes it;
 * - toggling a singleton replaces the whole selection with it;
 * - toggling anything else drops any singleton first, then adds it.
 */
export function toggleLabel(
  selection: ReadonlySet<number>,
  id: number,
): Set<number> {
  if (!ALL_IDS.includes(id)) {
    throw new Error(`unknown label ${id}`);
  }
  if (selection.has(id)) {
    const next = new Set(selection);
    next.delete(id);
    return next;
  }
  if (isSingleton(id)) {
    return new Set([id]);
  }
  const next = new Set([...selection].filter((lab) => !isSingleton(lab)));
  next.add(id);
  return next;
}

/** True when the set could be accepted by the service. */
export function isValidSelection(selection: ReadonlySet<number>): boolean {
  for (const id of selection) {
    if (!ALL_IDS.includes(id)) return false;
    if (isSingleton(id) && selection.size > 1) return false;
  }
  return true;
}
