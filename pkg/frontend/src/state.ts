/**
 * Session-scoped view state.
 *
 * One instance lives for one signed-in session in one tab. Entity
 * caches and form drafts never outlive it, and drafts are dropped the
 * moment a submit succeeds, so nothing stale can be resubmitted.
 */

export interface SessionInfo {
  token: string;
  userId: string;
  displayName: string;
  isFacilityStaff: boolean;
}

export class ViewState {
  session: SessionInfo | null = null;
  route = "publications";
  private caches = new Map<string, unknown>();
  private drafts = new Map<string, Record<string, unknown>>();

  startSession(info: SessionInfo): void {
    this.endSession();
    this.session = info;
  }

  endSession(): void {
    // everything below is scoped to the session; see module docstring
    this.session = null;
    this.caches.clear();
    this.drafts.clear();
    this.route = "publications";
  }

  cache<T>(key: string, value: T): T {
    if (this.session === null) return value;
    this.caches.set(key, value);
    return value;
  }

  cached<T>(key: string): T | undefined {
    return this.caches.get(key) as T | undefined;
  }

  draft<T extends object>(formId: string, init: () => T): T {
    let d = this.drafts.get(formId);
    if (!d) {
      d = init() as Record<string, unknown>;
      this.drafts.set(formId, d);
    }
    return d as T;
  }

  setDraft<T extends object>(formId: string, value: T): void {
    this.drafts.set(formId, value as Record<string, unknown>);
  }

  hasDraft(formId: string): boolean {
    return this.drafts.has(formId);
  }

  submitSucceeded(formId: string): void {
    this.drafts.delete(formId);
  }
}
