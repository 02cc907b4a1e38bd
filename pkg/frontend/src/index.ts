export * from "./api.js";
export * from "./template.js";
export * from "./editor.js";
export * from "./factentry.js";
export * from "./evaluation.js";
export * from "./suggestions.js";
