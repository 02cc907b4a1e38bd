/** Spins up a real fsforge service on a scratch store for integration tests. */
import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, dirname } from "node:path";
import { fileURLToPath } from "node:url";

import { ApiClient } from "../src/api.js";

const HERE = dirname(fileURLToPath(import.meta.url));

const BOOT = `
import sys
import uvicorn
from fsforge.service import create_app
uvicorn.run(create_app(sys.argv[1]), host="127.0.0.1", port=int(sys.argv[2]),
            log_level="warning")
`;

export interface Service {
  baseUrl: string;
  client: ApiClient;
  storeDir: string;
  stop(): void;
}

let nextPort = 8100 + (process.pid % 500);

export async function startService(): Promise<Service> {
  const storeDir = mkdtempSync(join(tmpdir(), "fsforge-webui-"));
  for (let attempt = 0; attempt < 5; attempt++) {
    const port = nextPort++;
    const proc = spawn("python3", ["-c", BOOT, storeDir, String(port)],
                       { stdio: ["ignore", "ignore", "pipe"] });
    let stderr = "";
    proc.stderr.on("data", (chunk) => { stderr += chunk; });
    const baseUrl = `http://127.0.0.1:${port}`;
    const ready = await waitForService(baseUrl, proc);
    if (ready) {
      return {
        baseUrl,
        client: new ApiClient(baseUrl),
        storeDir,
        stop: () => { proc.kill(); },
      };
    }
    proc.kill();
    if (!stderr.includes("address already in use")) {
      throw new Error(`service failed to start: ${stderr}`);
    }
  }
  throw new Error("no free port for the test service");
}

async function waitForService(baseUrl: string, proc: ChildProcess): Promise<boolean> {
  const deadline = Date.now() + 15_000;
  while (Date.now() < deadline) {
    if (proc.exitCode !== null) return false;
    try {
      const res = await fetch(`${baseUrl}/templates`);
      if (res.ok) return true;
    } catch {
      // not listening yet
    }
    await new Promise((resolve) => setTimeout(resolve, 100));
  }
  return false;
}

export function fixtureText(name: string): string {
  return readFileSync(join(HERE, "fixtures", name), "utf-8");
}
