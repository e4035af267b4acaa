// Entry point: hash-routed single page with a login gate per role.
//   #/admin                requester console
//   #/worker/<experiment>  worker task flow

import { ApiClient } from "./api.js";
import { AdminView } from "./adminView.js";
import { clear, el } from "./dom.js";
import { WorkerView } from "./workerView.js";

export function mountApp(root: HTMLElement, baseUrl = ""): void {
  const api = new ApiClient(baseUrl);

  function renderLogin(onDone: () => void, admin: boolean): void {
    clear(root);
    const name = el("input", { type: "text", "data-testid": "login-name" }) as HTMLInputElement;
    const key = el("input", { type: "password", "data-testid": "login-key" }) as HTMLInputElement;
    const error = el("div", { class: "error", "data-testid": "login-error" });
    root.append(
      el(
        "form",
        {
          "data-testid": "login-form",
          onsubmit: (event: Event) => {
            event.preventDefault();
            api
              .login(name.value, admin ? key.value : undefined)
              .then(onDone)
              .catch((e) => (error.textContent = String(e)));
          },
        },
        el("h2", {}, admin ? "Requester login" : "Worker login"),
        el("label", {}, "Name ", name),
        admin ? el("label", {}, "Admin key ", key) : null,
        el("button", { type: "submit", "data-testid": "login-submit" }, "Log in"),
        error,
      ),
    );
  }

  function route(): void {
    const hash = window.location.hash || "#/";
    if (hash.startsWith("#/admin")) {
      renderLogin(() => {
        clear(root);
        new AdminView(root, api).render();
      }, true);
    } else if (hash.startsWith("#/worker/")) {
      const experiment = hash.split("/")[2];
      renderLogin(() => {
        clear(root);
        void new WorkerView(root, api, experiment).start();
      }, false);
    } else {
      clear(root);
      root.append(
        el("h1", {}, "lexgap"),
        el("p", {}, "Cross-lingual lexical gap crowdsourcing."),
        el("ul", {},
          el("li", {}, el("a", { href: "#/admin" }, "Requester console")),
          el("li", {}, el("a", { href: "#/worker/exp1" }, "Worker flow (exp1)")),
        ),
      );
    }
  }

  window.addEventListener("hashchange", route);
  route();
}

declare global {
  interface Window {
    lexgapMount?: typeof mountApp;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  mountApp(document.getElementById("app")!);
}
window.lexgapMount = mountApp;
