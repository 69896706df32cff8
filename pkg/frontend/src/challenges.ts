/** Interactive challenge surfaces: permission prompts, phishing emails,
 * impersonation push notifications.
 *
 * Decision tuples are the only thing ever posted.  The mock login forms
 * accept typed credentials to stay believable, but the submit handlers drop
 * the text on the floor: requests carry decision labels, nothing else.
 * Ignoring (dismissing) a lure posts nothing - the platform resolves silent
 * instances as safe when they expire.
 */

import { ApiClient, ApiError } from "./api.js";
import { el } from "./dom.js";
import type { Decision, PendingChallenge } from "./types.js";

export interface FlowCallbacks {
  onResolved?: (instanceId: string, decisions: Decision[]) => void;
  onError?: (instanceId: string, error: ApiError) => void;
}

function resultNote(text: string): HTMLElement {
  return el("div", { class: "challenge-result" }, [text]);
}

function conflictBanner(): HTMLElement {
  return el("div", { class: "banner error", role: "alert" },
            ["This challenge was already answered elsewhere."]);
}

class Submitter {
  private submitted = false;

  constructor(private readonly client: ApiClient,
              private readonly instanceId: string,
              private readonly root: HTMLElement,
              private readonly callbacks: FlowCallbacks) {}

  /** Posts once; re-entry is a no-op (double submit is disabled client-side). */
  async submit(decisions: Decision[], doneText: string): Promise<void> {
    if (this.submitted) {
      return;
    }
    this.submitted = true;
    this.root.querySelectorAll("button").forEach((b) => (b.disabled = true));
    try {
      await this.client.submitChallenge(this.instanceId, decisions);
      this.root.replaceChildren(resultNote(doneText));
      this.callbacks.onResolved?.(this.instanceId, decisions);
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.root.replaceChildren(conflictBanner());
      }
      if (error instanceof ApiError) {
        this.callbacks.onError?.(this.instanceId, error);
      } else {
        throw error;
      }
    }
  }
}

function loginView(skinLabel: string, onSubmit: () => void, onBack: () => void): HTMLElement {
  const username = el("input", { type: "text", name: "username",
                                 placeholder: "Username", autocomplete: "off" });
  const password = el("input", { type: "password", name: "password",
                                 placeholder: "Password", autocomplete: "off" });
  const submit = el("button", { class: "login-submit" }, ["Log in"]);
  const back = el("button", { class: "login-back" }, ["Back"]);
  submit.addEventListener("click", (event) => {
    event.preventDefault();
    onSubmit();  // typed credentials stay in these detached inputs
  });
  back.addEventListener("click", (event) => {
    event.preventDefault();
    onBack();
  });
  return el("form", { class: `mock-login skin-${skinLabel}` }, [
    el("h2", {}, [skinLabel]),
    username, password, submit, back,
  ]);
}

export function renderChallengeCard(challenge: PendingChallenge, client: ApiClient,
                                    callbacks: FlowCallbacks = {}): HTMLElement {
  const root = el("article", {
    class: `challenge challenge-${challenge.kind}`,
    "data-instance": challenge.instance_id,
  });
  const submitter = new Submitter(client, challenge.instance_id, root, callbacks);
  const payload = challenge.payload;

  if (challenge.kind === "permission_prompt") {
    const allow = el("button", { class: "perm-allow" }, ["Allow"]);
    const deny = el("button", { class: "perm-deny" }, ["Deny"]);
    allow.addEventListener("click", () => void submitter.submit(["unsafe"], "Permission granted."));
    deny.addEventListener("click", () => void submitter.submit(["safe"], "Permission denied."));
    root.append(
      el("div", { class: "perm-text" },
         [`${payload.app} requests ${payload.permission} permission`]),
      allow, deny,
    );
    return root;
  }

  // Two-decision flows: engage with the lure, then the mock login.
  const isEmail = challenge.kind === "email";
  const title = isEmail ? payload.sender : payload.service;
  const text = isEmail ? payload.lure : payload.notification;
  const skin = isEmail ? (payload.skin ?? "login") : payload.service;
  const open = el("button", { class: "lure-open" }, [isEmail ? "Open link" : "Open"]);
  const dismiss = el("button", { class: "lure-dismiss" }, ["Dismiss"]);

  const card = el("div", { class: "lure-card" }, [
    el("strong", { class: "lure-title" }, [title]),
    // The platform app's own name next to the impersonated one is the tell.
    el("span", { class: "lure-via" }, [" via isatrain"]),
    el("p", { class: "lure-text" }, [text]),
    open, dismiss,
  ]);

  open.addEventListener("click", () => {
    // Decision point 1 taken (unsafe); point 2 decided in the login view.
    const login = loginView(
      skin,
      () => void submitter.submit(["unsafe", "unsafe"], "Signed in."),
      () => void submitter.submit(["unsafe", "safe"], "Cancelled."),
    );
    root.replaceChildren(login);
  });
  dismiss.addEventListener("click", () => {
    // Ignoring the lure is safe behavior; nothing is posted and the
    // platform resolves the instance as safe at expiry.
    root.replaceChildren(resultNote("Dismissed."));
    callbacks.onResolved?.(challenge.instance_id, []);
  });

  root.append(card);
  return root;
}

export async function renderPendingChallenges(client: ApiClient,
                                              callbacks: FlowCallbacks = {}):
    Promise<HTMLElement> {
  const pending = await client.pendingChallenges();
  const root = el("section", { class: "challenges", "data-screen": "challenges" }, [
    el("h1", {}, ["Waiting for you"]),
  ]);
  if (pending.length === 0) {
    root.append(el("p", { class: "empty" }, ["Nothing pending."]));
  }
  for (const challenge of pending) {
    root.append(renderChallengeCard(challenge, client, callbacks));
  }
  return root;
}
