/**
 * Browser bootstrap: config from the query string, one delegated click
 * handler, one in-flight vote at a time (enforced by the controller).
 *
 * ?session=<token>   bearer token identifying this annotator session
 * ?lang=cs|en        chrome language (default cs)
 * ?base=<url>        API base URL (default: same origin)
 */

import { ApiClient, Choice } from "./api.js";
import { SessionController } from "./controller.js";
import { strings } from "./i18n.js";
import { renderApp } from "./view.js";

function bootstrap(): void {
  const params = new URLSearchParams(window.location.search);
  const session = params.get("session") ?? "";
  const lang = params.get("lang") ?? "cs";
  const base = params.get("base") ?? "";
  const root = document.getElementById("app")!;
  const t = strings(lang);

  if (!session) {
    root.innerHTML = "<p>Missing ?session=&lt;token&gt; in the URL.</p>";
    return;
  }

  const controller = new SessionController(
    new ApiClient(base, session),
    (state) => {
      root.innerHTML = renderApp(state, t);
    },
  );

  root.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const action = target.dataset.action;
    if (action === "vote") {
      void controller.choose(target.dataset.choice as Choice);
    } else if (action === "retry") {
      void controller.retry();
    }
  });

  document.title = t.title;
  void controller.start();
}

bootstrap();
