/** Application shell: hash navigation, session token, polling refresh.
 *
 * Every screen is a pure function of the latest API payloads; the shell only
 * decides when to re-fetch.  Scores change once per day (the midnight tick),
 * so a slow poll is plenty.
 */

import { ApiClient, ApiError } from "./api.js";
import { renderPendingChallenges } from "./challenges.js";
import { el } from "./dom.js";
import { renderHome, renderRetryBanner } from "./home.js";
import { openLearning } from "./learning.js";
import { renderLeaderboard } from "./leaderboard.js";

const POLL_INTERVAL_MS = 30_000;

type Screen = "home" | "learning" | "leaderboard" | "challenges";

function loginForm(onLogin: (base: string, user: string, token: string) => void): HTMLElement {
  const base = el("input", { type: "text", name: "base", value: "http://127.0.0.1:8000" });
  const user = el("input", { type: "text", name: "user", placeholder: "user id" });
  const token = el("input", { type: "password", name: "token", placeholder: "access token" });
  const go = el("button", {}, ["Sign in"]);
  go.addEventListener("click", (event) => {
    event.preventDefault();
    onLogin(base.value, user.value, token.value);
  });
  return el("form", { class: "login" }, [
    el("h1", {}, ["Sign in"]), base, user, token, go,
  ]);
}

export class App {
  private client: ApiClient | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(private readonly root: HTMLElement,
              private readonly fetchFn: typeof fetch = fetch) {}

  start(): void {
    const stored = sessionStorage.getItem("session");
    if (stored) {
      const { base, user, token } = JSON.parse(stored);
      this.client = new ApiClient(base, user, token, this.fetchFn);
      this.showScreen(this.currentScreen());
    } else {
      this.showLogin();
    }
    window.addEventListener("hashchange", () => {
      if (this.client) {
        void this.showScreen(this.currentScreen());
      }
    });
    this.timer = setInterval(() => {
      if (this.client) {
        void this.showScreen(this.currentScreen(), { isRefresh: true });
      }
    }, POLL_INTERVAL_MS);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
    }
  }

  private currentScreen(): Screen {
    const name = window.location.hash.replace(/^#\/?/, "");
    return (["home", "learning", "leaderboard", "challenges"] as Screen[])
      .includes(name as Screen) ? (name as Screen) : "home";
  }

  private showLogin(): void {
    this.root.replaceChildren(loginForm((base, user, token) => {
      sessionStorage.setItem("session", JSON.stringify({ base, user, token }));
      this.client = new ApiClient(base, user, token, this.fetchFn);
      void this.showScreen("home");
    }));
  }

  async showScreen(screen: Screen, opts: { isRefresh?: boolean } = {}): Promise<void> {
    if (!this.client) {
      this.showLogin();
      return;
    }
    const client = this.client;
    try {
      let view: HTMLElement;
      switch (screen) {
        case "home":
          view = renderHome(await client.home());
          void client.logView("home");
          break;
        case "learning":
          view = await openLearning(client);  // logs its single view itself
          break;
        case "leaderboard":
          view = renderLeaderboard(await client.leaderboard(), client.userId);
          void client.logView("leaderboard");
          break;
        case "challenges":
          view = await renderPendingChallenges(client);
          break;
      }
      this.root.replaceChildren(this.nav(screen), view);
    } catch (error) {
      if (error instanceof ApiError && error.status === 401) {
        sessionStorage.removeItem("session");
        this.client = null;
        this.showLogin();
        return;
      }
      if (opts.isRefresh) {
        // Keep the stale view; surface a retry banner on top.
        this.root.prepend(renderRetryBanner(() => void this.showScreen(screen)));
      } else {
        this.root.replaceChildren(
          renderRetryBanner(() => void this.showScreen(screen)));
      }
    }
  }

  private nav(active: Screen): HTMLElement {
    const link = (screen: Screen, label: string) =>
      el("a", { href: `#/${screen}`, class: screen === active ? "active" : "" }, [label]);
    return el("nav", {}, [
      link("home", "Home"),
      link("learning", "Learning"),
      link("leaderboard", "Leaderboard"),
      link("challenges", "Challenges"),
    ]);
  }
}

export function mount(): void {
  const root = document.getElementById("app");
  if (root) {
    new App(root).start();
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  mount();
}
