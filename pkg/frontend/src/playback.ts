/** Playback clock: maps wall time to a frame index with pause/scrub/speed. */

export class PlaybackClock {
  readonly frameRate: number;
  readonly totalFrames: number;
  speed = 1.0;
  playing = false;
  private cursor = 0; // fractional frame

  constructor(totalFrames: number, frameRate: number) {
    if (totalFrames < 1 || frameRate <= 0) {
      throw new RangeError(`invalid clip: ${totalFrames} frames at ${frameRate} fps`);
    }
    this.totalFrames = totalFrames;
    this.frameRate = frameRate;
  }

  get frame(): number {
    return Math.min(this.totalFrames - 1, Math.floor(this.cursor));
  }

  /** Advance by dt seconds of wall time; loops at the end. */
  tick(dtSeconds: number): number {
    if (this.playing) {
      this.cursor += dtSeconds * this.frameRate * this.speed;
      if (this.cursor >= this.totalFrames) this.cursor %= this.totalFrames;
      if (this.cursor < 0) this.cursor = ((this.cursor % this.totalFrames) + this.totalFrames) % this.totalFrames;
    }
    return this.frame;
  }

  play(): void {
    this.playing = true;
  }

  pause(): void {
    this.playing = false;
  }

  toggle(): void {
    this.playing = !this.playing;
  }

  /** Jump to a frame (clamped); does not change play state. */
  scrub(frame: number): number {
    this.cursor = Math.min(this.totalFrames - 1, Math.max(0, frame));
    return this.frame;
  }

  /** Scrub from a [0, 1] timeline fraction. */
  scrubFraction(fraction: number): number {
    return this.scrub(fraction * this.totalFrames);
  }
}
