/** DOM wiring: login form, blinded rating view with zoom, completion report. */

import { SurveyApi } from "./api.js";
import { fractionJudgedReal, confusionMatrix, perClassScores } from "./confusion.js";
import { SessionFlow } from "./session.js";
import type { Source } from "./types.js";
import { panBy, resetZoom, toTransform, zoomAt, type ZoomState } from "./zoom.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text !== undefined) node.textContent = text;
  return node;
}

export class SurveyApp {
  private zoom: ZoomState = resetZoom();
  private dragging: { x: number; y: number } | null = null;
  private message = "";

  constructor(
    private readonly root: HTMLElement,
    private readonly api: SurveyApi,
    private readonly flow: SessionFlow,
  ) {}

  render(): void {
    this.root.replaceChildren();
    switch (this.flow.phase) {
      case "login":
        this.renderLogin();
        break;
      case "rating":
        this.renderRating();
        break;
      case "complete":
        void this.renderComplete();
        break;
    }
  }

  private note(text: string): void {
    this.message = text;
    const banner = this.root.querySelector(".message");
    if (banner) banner.textContent = text;
  }

  private renderLogin(): void {
    const box = el("div", { class: "card login" });
    box.append(el("h1", {}, "Visual Turing test"));
    box.append(
      el(
        "p",
        {},
        `You will see ${this.flow.deck.n_items} tissue patches, one at a time. ` +
          "Decide for each whether it is a real FFPE section or a synthesized FFPE-style image. " +
          "Answers are final; you cannot go back.",
      ),
    );
    const form = el("form");
    const input = el("input", {
      type: "text",
      placeholder: "rater id (e.g. initials)",
      required: "required",
      autofocus: "autofocus",
    });
    const button = el("button", { type: "submit" }, "Start survey");
    form.append(input, button);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.flow
        .start(input.value)
        .then(() => this.render())
        .catch((error: Error) => this.note(error.message));
    });
    box.append(form, el("p", { class: "message" }, this.message));
    this.root.append(box);
  }

  private renderRating(): void {
    const item = this.flow.currentItem();
    if (!item) {
      this.render();
      return;
    }
    this.zoom = resetZoom();
    const { answered, total } = this.flow.progress();

    const header = el("div", { class: "topbar" });
    header.append(el("span", {}, `Patch ${answered + 1} of ${total}`));
    const progress = el("progress", { max: String(total), value: String(answered) });
    header.append(progress);

    const viewer = el("div", { class: "viewer" });
    const img = el("img", {
      src: this.api.imageUrl(item.item_id),
      alt: "histology patch (source withheld)",
      draggable: "false",
    });
    viewer.append(img);
    this.bindZoom(viewer, img);

    const controls = el("div", { class: "controls" });
    const realButton = el("button", { class: "real" }, "Real FFPE (R)");
    const aiButton = el("button", { class: "ai" }, "Synthesized (S)");
    const submit = (judged: Source) => {
      realButton.disabled = aiButton.disabled = true;
      void this.flow
        .submit(judged)
        .then(() => this.render())
        .catch((error: Error) => {
          this.note(error.message);
          this.render();
        });
    };
    realButton.addEventListener("click", () => submit("real_ffpe"));
    aiButton.addEventListener("click", () => submit("ai_ffpe"));
    controls.append(realButton, aiButton);

    const hint = el("p", { class: "hint" }, "Scroll or pinch to zoom, drag to pan, double-click to reset.");

    this.root.append(header, viewer, controls, hint, el("p", { class: "message" }, this.message));
    this.message = "";

    const onKey = (event: KeyboardEvent) => {
      if (event.key === "r" || event.key === "R") submit("real_ffpe");
      if (event.key === "s" || event.key === "S") submit("ai_ffpe");
    };
    document.onkeydown = onKey;
  }

  private bindZoom(viewer: HTMLElement, img: HTMLImageElement): void {
    const apply = () => {
      img.style.transform = toTransform(this.zoom);
    };
    viewer.addEventListener(
      "wheel",
      (event) => {
        event.preventDefault();
        const rect = viewer.getBoundingClientRect();
        const factor = event.deltaY < 0 ? 1.2 : 1 / 1.2;
        this.zoom = zoomAt(this.zoom, event.clientX - rect.left, event.clientY - rect.top, factor);
        apply();
      },
      { passive: false },
    );
    viewer.addEventListener("pointerdown", (event) => {
      this.dragging = { x: event.clientX, y: event.clientY };
      viewer.setPointerCapture(event.pointerId);
    });
    viewer.addEventListener("pointermove", (event) => {
      if (!this.dragging) return;
      this.zoom = panBy(this.zoom, event.clientX - this.dragging.x, event.clientY - this.dragging.y);
      this.dragging = { x: event.clientX, y: event.clientY };
      apply();
    });
    viewer.addEventListener("pointerup", () => {
      this.dragging = null;
    });
    viewer.addEventListener("dblclick", () => {
      this.zoom = resetZoom();
      apply();
    });
  }

  private async renderComplete(): Promise<void> {
    document.onkeydown = null;
    const session = this.flow.session;
    if (!session) return;
    const box = el("div", { class: "card" });
    box.append(el("h1", {}, "Survey complete"));
    box.append(el("p", {}, `Thank you, ${session.rater_id}. All ${session.n_items} judgments are recorded.`));

    try {
      const responses = await this.api.fetchExport(session.session_id);
      const matrix = confusionMatrix(responses);
      const scores = perClassScores(matrix);
      const judgedReal = fractionJudgedReal(matrix);

      const table = el("table");
      table.append(
        el("caption", {}, "Your confusion matrix (rows: true source, columns: your call)"),
      );
      const head = el("tr");
      head.append(el("th"), el("th", {}, "judged real"), el("th", {}, "judged synthesized"));
      table.append(head);
      for (const cls of ["real_ffpe", "ai_ffpe"] as const) {
        const row = el("tr");
        row.append(
          el("th", {}, cls === "real_ffpe" ? "real FFPE" : "synthesized"),
          el("td", {}, String(matrix[cls].real_ffpe)),
          el("td", {}, String(matrix[cls].ai_ffpe)),
        );
        table.append(row);
      }
      box.append(table);

      const summary = el("ul");
      for (const cls of ["real_ffpe", "ai_ffpe"] as const) {
        const s = scores[cls];
        summary.append(
          el(
            "li",
            {},
            `${cls === "real_ffpe" ? "real FFPE" : "synthesized"}: precision ${s.precision.toFixed(2)}, ` +
              `recall ${s.recall.toFixed(2)}, F1 ${s.f1.toFixed(2)}; judged real ${(judgedReal[cls] * 100).toFixed(0)}%`,
          ),
        );
      }
      box.append(summary);

      const link = el("a", { href: this.api.exportUrl(session.session_id), download: "responses.json" }, "Download responses (JSON)");
      box.append(el("p", {}), link);
    } catch (error) {
      box.append(el("p", { class: "message" }, (error as Error).message));
    }

    this.root.append(box);
  }
}
