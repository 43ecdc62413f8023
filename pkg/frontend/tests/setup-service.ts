import { spawn } from "node:child_process";

import { API_PORT, API_URL } from "./config.js";

async function reachable(): Promise<boolean> {
  try {
    const res = await fetch(`${API_URL}/models`);
    return res.ok;
  } catch {
    return false;
  }
}

/**
 * Vitest global setup: start the Python debugger service once for the whole
 * run, unless something is already listening on the test port.
 */
export default async function setup(): Promise<() => void> {
  if (await reachable()) return () => {};

  const child = spawn(
    "python3",
    [
      "-m",
      "uvicorn",
      "--factory",
      "secsim.service:create_app",
      "--host",
      "127.0.0.1",
      "--port",
      String(API_PORT),
      "--log-level",
      "warning",
    ],
    { stdio: "ignore" },
  );

  const deadline = Date.now() + 20_000;
  while (!(await reachable())) {
    if (child.exitCode !== null || Date.now() > deadline) {
      child.kill();
      throw new Error(`debugger service did not come up at ${API_URL}`);
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }

  return () => {
    child.kill("SIGTERM");
  };
}
