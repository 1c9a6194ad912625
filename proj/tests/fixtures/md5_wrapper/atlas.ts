import crypto from "crypto";

export class AtlasClient {
  private apiKey: string;
  private privateKey: string;

  constructor(apiKey: string, privateKey: string) {
    this.apiKey = apiKey;
    this.privateKey = privateKey;
  }

  private md5(data: string): string {
    return crypto.createHash('md5').update(data).digest('hex');
  }

  digestHeader(method: string, url: string, authDetails: any, nc: string, cnonce: string): string {
    const ha1 = this.md5(`${this.apiKey}:${authDetails.realm}:${this.privateKey}`);
    const ha2 = this.md5(`${method}:${new URL(url).pathname}`);
    const response = this.md5(`${ha1}:${authDetails.nonce}:${nc}:${cnonce}:${authDetails.qop}:${ha2}`);
    return response;
  }
}
