import { SurveyApi } from "./api.js";
import { SurveyApp } from "./app.js";
import { SessionFlow } from "./session.js";

async function bootstrap(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app mount point");
  const api = new SurveyApi();
  try {
    const flow = await SessionFlow.initialize(api, window.localStorage);
    new SurveyApp(root, api, flow).render();
  } catch (error) {
    root.textContent = `failed to load survey: ${(error as Error).message}`;
  }
}

void bootstrap();
